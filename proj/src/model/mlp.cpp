#include "linkvol/model/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "linkvol/common/rng.hpp"

namespace linkvol::model {

namespace {

// Forward pass keeping activations; A[0] is the input, A.back() the output.
std::vector<Eigen::MatrixXd> forward(const std::vector<Eigen::MatrixXd>& W,
                                     const std::vector<Eigen::VectorXd>& b,
                                     const Eigen::MatrixXd& X) {
  std::vector<Eigen::MatrixXd> A;
  A.reserve(W.size() + 1);
  A.push_back(X);
  for (std::size_t l = 0; l < W.size(); ++l) {
    Eigen::MatrixXd Z = A.back() * W[l].transpose();
    Z.rowwise() += b[l].transpose();
    if (l + 1 < W.size()) Z = Z.array().tanh();
    A.push_back(std::move(Z));
  }
  return A;
}

}  // namespace

void Mlp::init(Eigen::Index n_features, const std::vector<int>& hidden, std::uint64_t seed) {
  W_.clear();
  b_.clear();
  epoch_loss_.clear();
  std::vector<Eigen::Index> widths;
  widths.push_back(n_features);
  for (const int h : hidden) {
    if (h < 1) throw std::invalid_argument("mlp: hidden width must be >= 1");
    widths.push_back(h);
  }
  widths.push_back(1);
  Rng rng(derive_seed(seed, 0x3117));
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Eigen::Index fan_in = widths[l];
    const Eigen::Index fan_out = widths[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < fan_out; ++i) {
      for (Eigen::Index j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-a, a);
    }
    W_.push_back(std::move(w));
    b_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

double Mlp::loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const {
  const auto A = forward(W_, b_, X);
  return (A.back().col(0) - y).squaredNorm() / (2.0 * static_cast<double>(X.rows()));
}

Eigen::VectorXd Mlp::gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const {
  const auto A = forward(W_, b_, X);
  const auto L = W_.size();
  std::vector<Eigen::MatrixXd> dW(L);
  std::vector<Eigen::VectorXd> db(L);
  // delta for the linear output layer of (1/2B)Σ(ŷ−y)².
  Eigen::MatrixXd delta = (A.back().col(0) - y) / static_cast<double>(X.rows());
  for (std::size_t l = L; l-- > 0;) {
    dW[l] = delta.transpose() * A[l];
    db[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * W_[l]).cwiseProduct(
          (1.0 - A[l].array().square()).matrix());  // tanh'(z) = 1 - tanh²(z)
    }
  }
  Eigen::VectorXd g(param_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < L; ++l) {
    for (Eigen::Index i = 0; i < dW[l].rows(); ++i) {
      g.segment(at, dW[l].cols()) = dW[l].row(i).transpose();
      at += dW[l].cols();
    }
    g.segment(at, db[l].size()) = db[l];
    at += db[l].size();
  }
  return g;
}

Eigen::Index Mlp::param_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) n += W_[l].size() + b_[l].size();
  return n;
}

Eigen::VectorXd Mlp::get_params() const {
  Eigen::VectorXd theta(param_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    for (Eigen::Index i = 0; i < W_[l].rows(); ++i) {
      theta.segment(at, W_[l].cols()) = W_[l].row(i).transpose();
      at += W_[l].cols();
    }
    theta.segment(at, b_[l].size()) = b_[l];
    at += b_[l].size();
  }
  return theta;
}

void Mlp::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != param_count()) throw std::invalid_argument("mlp: wrong parameter count");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    for (Eigen::Index i = 0; i < W_[l].rows(); ++i) {
      W_[l].row(i) = theta.segment(at, W_[l].cols()).transpose();
      at += W_[l].cols();
    }
    b_[l] = theta.segment(at, b_[l].size());
    at += b_[l].size();
  }
}

void Mlp::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpConfig& cfg,
              std::uint64_t seed) {
  if (!cfg.standardized_input) {
    throw std::invalid_argument(
        "mlp: requires standardized inputs (run the standardize step, or set "
        "standardized_input after scaling manually)");
  }
  if (cfg.epochs < 1 || cfg.batch < 1 || cfg.lr <= 0.0) {
    throw std::invalid_argument("mlp: epochs/batch/lr must be positive");
  }
  if (X.rows() == 0) throw std::invalid_argument("mlp: no training rows");
  init(X.cols(), cfg.hidden, seed);

  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(seed, 0xe90c000 + static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      Eigen::MatrixXd Xb(count, X.cols());
      Eigen::VectorXd yb(count);
      for (std::size_t i = 0; i < count; ++i) {
        Xb.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(order[start + i]));
        yb(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(order[start + i]));
      }
      const Eigen::VectorXd g = gradient(Xb, yb);
      set_params(get_params() - cfg.lr * g);
    }
    epoch_loss_.push_back(loss(X, y));
  }
}

double Mlp::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained()) throw std::logic_error("mlp: predict before fit");
  Eigen::MatrixXd X(1, x.size());
  X.row(0) = x;
  return forward(W_, b_, X).back()(0, 0);
}

Eigen::VectorXd Mlp::predict(const Eigen::MatrixXd& X) const {
  if (!trained()) throw std::logic_error("mlp: predict before fit");
  return forward(W_, b_, X).back().col(0);
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  auto& layers = j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < W_.size(); ++l) {
    nlohmann::json lj;
    lj["rows"] = W_[l].rows();
    lj["cols"] = W_[l].cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(W_[l].size()));
    for (Eigen::Index i = 0; i < W_[l].rows(); ++i) {
      for (Eigen::Index c = 0; c < W_[l].cols(); ++c) w.push_back(W_[l](i, c));
    }
    lj["w"] = w;
    lj["b"] = std::vector<double>(b_[l].data(), b_[l].data() + b_[l].size());
    layers.push_back(std::move(lj));
  }
  j["epoch_loss"] = epoch_loss_;
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp m;
  for (const auto& lj : j.at("layers")) {
    const auto rows = lj.at("rows").get<Eigen::Index>();
    const auto cols = lj.at("cols").get<Eigen::Index>();
    const auto w = lj.at("w").get<std::vector<double>>();
    const auto b = lj.at("b").get<std::vector<double>>();
    Eigen::MatrixXd W(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        W(i, c) = w[static_cast<std::size_t>(i * cols + c)];
      }
    }
    m.W_.push_back(std::move(W));
    m.b_.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  }
  m.epoch_loss_ = j.at("epoch_loss").get<std::vector<double>>();
  return m;
}

}  // namespace linkvol::model
