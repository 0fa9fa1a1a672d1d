#pragma once

#include <cstdint>
#include <vector>

#include "linkvol/model/tree.hpp"

namespace linkvol::model {

struct GbrtConfig {
  int n_stages = 300;
  double learning_rate = 0.05;
  int max_depth = 3;
  int min_samples_leaf = 5;
};

// Gradient boosting under squared loss: F_0 = mean(y), each stage fits a
// depth-limited tree to the current residuals.
class Gbrt {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbrtConfig& cfg);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return trained_; }
  double f0() const { return f0_; }
  /// Training MSE after each stage; non-increasing under squared loss.
  const std::vector<double>& stage_mse() const { return stage_mse_; }

  nlohmann::json to_json() const;
  static Gbrt from_json(const nlohmann::json& j);

 private:
  double f0_ = 0.0;
  double learning_rate_ = 0.0;
  std::vector<RegressionTree> stages_;
  std::vector<double> stage_mse_;
  bool trained_ = false;
};

struct AdaBoostR2Config {
  int n_stages = 100;
  int max_depth = 4;
  int min_samples_leaf = 5;
};

// Drucker's AdaBoost.R2 with linear loss: stages train on weight-resampled
// bootstraps, reweighting concentrates on the worst-predicted rows, and
// prediction is the weighted median of stage predictions.
class AdaBoostR2 {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const AdaBoostR2Config& cfg,
           std::uint64_t seed);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return !stages_.empty(); }
  std::size_t stage_count() const { return stages_.size(); }
  bool stopped_early() const { return stopped_early_; }
  bool perfect_stage() const { return perfect_stage_; }
  const std::vector<double>& stage_log_weights() const { return stage_weights_; }
  const std::vector<double>& stage_avg_losses() const { return stage_losses_; }

  nlohmann::json to_json() const;
  static AdaBoostR2 from_json(const nlohmann::json& j);

 private:
  std::vector<RegressionTree> stages_;
  std::vector<double> stage_weights_;  // ln(1/beta_m)
  std::vector<double> stage_losses_;   // average weighted loss per kept stage
  bool stopped_early_ = false;
  bool perfect_stage_ = false;
};

/// Smallest value whose cumulative weight reaches half the total. Exposed for
/// direct testing; AdaBoostR2 prediction routes through it.
double weighted_median(std::vector<std::pair<double, double>> value_weight);

}  // namespace linkvol::model
