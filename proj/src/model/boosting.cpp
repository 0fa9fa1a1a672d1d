#include "linkvol/model/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace linkvol::model {

void Gbrt::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbrtConfig& cfg) {
  if (cfg.n_stages < 1) throw std::invalid_argument("gbrt: need n_stages >= 1");
  if (cfg.learning_rate <= 0.0 || cfg.learning_rate > 1.0) {
    throw std::invalid_argument("gbrt: learning_rate must be in (0, 1]");
  }
  if (X.rows() == 0) throw std::invalid_argument("gbrt: no training rows");
  stages_.clear();
  stage_mse_.clear();
  f0_ = y.mean();
  learning_rate_ = cfg.learning_rate;

  const TreeConfig tree_cfg{cfg.max_depth, cfg.min_samples_leaf, 0};
  Eigen::VectorXd current = Eigen::VectorXd::Constant(y.size(), f0_);
  for (int m = 0; m < cfg.n_stages; ++m) {
    const Eigen::VectorXd residual = y - current;
    RegressionTree tree;
    tree.fit(X, residual, tree_cfg);
    current += learning_rate_ * tree.predict(X);
    stages_.push_back(std::move(tree));
    stage_mse_.push_back((y - current).squaredNorm() / static_cast<double>(y.size()));
  }
  trained_ = true;
}

double Gbrt::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained_) throw std::logic_error("gbrt: predict before fit");
  double out = f0_;
  for (const auto& t : stages_) out += learning_rate_ * t.predict_row(x);
  return out;
}

Eigen::VectorXd Gbrt::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
  return out;
}

nlohmann::json Gbrt::to_json() const {
  nlohmann::json j;
  j["f0"] = f0_;
  j["learning_rate"] = learning_rate_;
  j["stage_mse"] = stage_mse_;
  auto& arr = j["stages"] = nlohmann::json::array();
  for (const auto& t : stages_) arr.push_back(t.to_json());
  return j;
}

Gbrt Gbrt::from_json(const nlohmann::json& j) {
  Gbrt g;
  g.f0_ = j.at("f0").get<double>();
  g.learning_rate_ = j.at("learning_rate").get<double>();
  g.stage_mse_ = j.at("stage_mse").get<std::vector<double>>();
  for (const auto& tj : j.at("stages")) g.stages_.push_back(RegressionTree::from_json(tj));
  g.trained_ = true;
  return g;
}

double weighted_median(std::vector<std::pair<double, double>> value_weight) {
  if (value_weight.empty()) throw std::invalid_argument("weighted_median: empty input");
  double total = 0.0;
  for (const auto& [v, w] : value_weight) {
    if (w < 0.0) throw std::invalid_argument("weighted_median: negative weight");
    total += w;
  }
  std::sort(value_weight.begin(), value_weight.end());
  double cum = 0.0;
  for (const auto& [v, w] : value_weight) {
    cum += w;
    if (cum >= total / 2.0) return v;
  }
  return value_weight.back().first;
}

void AdaBoostR2::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const AdaBoostR2Config& cfg, std::uint64_t seed) {
  if (cfg.n_stages < 1) throw std::invalid_argument("adaboost: need n_stages >= 1");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n == 0) throw std::invalid_argument("adaboost: no training rows");
  stages_.clear();
  stage_weights_.clear();
  stage_losses_.clear();
  stopped_early_ = false;
  perfect_stage_ = false;

  const TreeConfig tree_cfg{cfg.max_depth, cfg.min_samples_leaf, 0};
  std::vector<double> w(n, 1.0 / static_cast<double>(n));

  for (int m = 0; m < cfg.n_stages; ++m) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
    // Weight-resampled bootstrap by CDF inversion.
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += w[i];
      cdf[i] = acc;
    }
    std::vector<std::int64_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform01() * acc;
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      rows.push_back(static_cast<std::int64_t>(it - cdf.begin()));
    }
    RegressionTree tree;
    tree.fit_rows(X, y, rows, tree_cfg);

    const Eigen::VectorXd pred = tree.predict(X);
    const Eigen::VectorXd err = (y - pred).cwiseAbs();
    const double max_err = err.maxCoeff();
    if (max_err <= 1e-12) {
      // Perfect learner: its (infinite-weight) median is just its prediction.
      stages_.clear();
      stage_weights_.clear();
      stage_losses_.clear();
      stages_.push_back(std::move(tree));
      stage_weights_.push_back(1.0);
      stage_losses_.push_back(0.0);
      perfect_stage_ = true;
      return;
    }
    double avg_loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      avg_loss += w[i] * (err(static_cast<Eigen::Index>(i)) / max_err);
    }
    if (avg_loss >= 0.5) {
      stopped_early_ = true;
      break;  // the stage that crossed the rule is discarded
    }
    const double beta = avg_loss / (1.0 - avg_loss);
    stages_.push_back(std::move(tree));
    stage_weights_.push_back(std::log(1.0 / beta));
    stage_losses_.push_back(avg_loss);
    double w_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double l = err(static_cast<Eigen::Index>(i)) / max_err;
      w[i] *= std::pow(beta, 1.0 - l);
      w_sum += w[i];
    }
    for (double& wi : w) wi /= w_sum;
  }
  if (stages_.empty()) {
    throw std::runtime_error("adaboost: first stage already at average loss >= 0.5");
  }
}

double AdaBoostR2::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained()) throw std::logic_error("adaboost: predict before fit");
  std::vector<std::pair<double, double>> vw;
  vw.reserve(stages_.size());
  for (std::size_t m = 0; m < stages_.size(); ++m) {
    vw.emplace_back(stages_[m].predict_row(x), stage_weights_[m]);
  }
  return weighted_median(std::move(vw));
}

Eigen::VectorXd AdaBoostR2::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
  return out;
}

nlohmann::json AdaBoostR2::to_json() const {
  nlohmann::json j;
  j["stage_weights"] = stage_weights_;
  j["stage_losses"] = stage_losses_;
  j["stopped_early"] = stopped_early_;
  j["perfect_stage"] = perfect_stage_;
  auto& arr = j["stages"] = nlohmann::json::array();
  for (const auto& t : stages_) arr.push_back(t.to_json());
  return j;
}

AdaBoostR2 AdaBoostR2::from_json(const nlohmann::json& j) {
  AdaBoostR2 a;
  a.stage_weights_ = j.at("stage_weights").get<std::vector<double>>();
  a.stage_losses_ = j.at("stage_losses").get<std::vector<double>>();
  a.stopped_early_ = j.at("stopped_early").get<bool>();
  a.perfect_stage_ = j.at("perfect_stage").get<bool>();
  for (const auto& tj : j.at("stages")) a.stages_.push_back(RegressionTree::from_json(tj));
  return a;
}

}  // namespace linkvol::model
