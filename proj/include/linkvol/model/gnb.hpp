#pragma once

#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

namespace linkvol::model {

struct GnbConfig {
  int n_bins = 10;
  double var_floor = 1e-9;  // relative to each feature's overall variance
};

// Naive-Bayes regression on an equal-frequency discretization of the target:
// bins act as classes, features get per-bin Gaussians, and the prediction is
// the posterior-weighted mean of the bin target means.
class GnbBinned {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GnbConfig& cfg);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return !priors_.empty(); }
  std::size_t bin_count() const { return priors_.size(); }
  /// Bins whose features all sat at the variance floor (degenerate spread).
  const std::vector<int>& floored_bins() const { return floored_bins_; }

  nlohmann::json to_json() const;
  static GnbBinned from_json(const nlohmann::json& j);

 private:
  std::vector<double> priors_;
  std::vector<double> bin_target_mean_;
  std::vector<Eigen::VectorXd> feat_mean_;  // per bin
  std::vector<Eigen::VectorXd> feat_var_;   // per bin, floored
  std::vector<int> floored_bins_;
};

}  // namespace linkvol::model
