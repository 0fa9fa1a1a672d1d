#include "linkvol/model/svr.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "linkvol/common/rng.hpp"

namespace linkvol::model {

double LinearSvr::objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double epsilon,
                            double C) const {
  const Eigen::VectorXd r = y - (X * w_).array().matrix() - Eigen::VectorXd::Constant(y.size(), b_);
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    hinge += std::max(0.0, std::abs(r(i)) - epsilon);
  }
  return 0.5 * w_.squaredNorm() + C * hinge;
}

void LinearSvr::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrConfig& cfg,
                    std::uint64_t seed) {
  if (!cfg.standardized_input) {
    throw std::invalid_argument(
        "svr: requires standardized inputs (run the standardize step, or set "
        "standardized_input after scaling manually)");
  }
  if (cfg.epsilon < 0.0) throw std::invalid_argument("svr: epsilon must be >= 0");
  if (cfg.C <= 0.0 || cfg.epochs < 1 || cfg.lr <= 0.0) {
    throw std::invalid_argument("svr: C/epochs/lr must be positive");
  }
  const auto n = static_cast<std::size_t>(X.rows());
  if (n == 0) throw std::invalid_argument("svr: no training rows");

  w_ = Eigen::VectorXd::Zero(X.cols());
  b_ = 0.0;
  trace_.clear();
  trained_ = true;  // objective() usable during fit

  const double nd = static_cast<double>(n);
  double lr = cfg.lr;
  double best = objective(X, y, cfg.epsilon, cfg.C);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::VectorXd w_before = w_;
    const double b_before = b_;
    Rng rng(derive_seed(seed, 0x5b9 + static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (const std::size_t i : order) {
      const auto row = static_cast<Eigen::Index>(i);
      const double r = y(row) - X.row(row).dot(w_) - b_;
      // Per-sample estimate of the full objective: ½‖w‖²/N + C·loss_i.
      Eigen::VectorXd g = w_ / nd;
      double gb = 0.0;
      if (std::abs(r) > cfg.epsilon) {
        const double sign = r > 0.0 ? 1.0 : -1.0;
        g -= cfg.C * sign * X.row(row).transpose();
        gb = -cfg.C * sign;
      }
      w_ -= lr * g;
      b_ -= lr * gb;
    }
    const double f = objective(X, y, cfg.epsilon, cfg.C);
    if (f <= best) {
      best = f;
    } else {
      w_ = w_before;  // roll back and cool down
      b_ = b_before;
      lr /= 2.0;
    }
    trace_.push_back(best);
  }
}

double LinearSvr::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained_) throw std::logic_error("svr: predict before fit");
  return x.dot(w_) + b_;
}

Eigen::VectorXd LinearSvr::predict(const Eigen::MatrixXd& X) const {
  if (!trained_) throw std::logic_error("svr: predict before fit");
  return (X * w_).array() + b_;
}

nlohmann::json LinearSvr::to_json() const {
  nlohmann::json j;
  j["w"] = std::vector<double>(w_.data(), w_.data() + w_.size());
  j["b"] = b_;
  j["objective_trace"] = trace_;
  return j;
}

LinearSvr LinearSvr::from_json(const nlohmann::json& j) {
  LinearSvr s;
  const auto w = j.at("w").get<std::vector<double>>();
  s.w_ = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  s.b_ = j.at("b").get<double>();
  s.trace_ = j.at("objective_trace").get<std::vector<double>>();
  s.trained_ = true;
  return s;
}

}  // namespace linkvol::model
