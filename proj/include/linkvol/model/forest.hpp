#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "linkvol/model/tree.hpp"

namespace linkvol::model {

struct ForestConfig {
  int n_trees = 300;
  int max_depth = 12;
  int min_samples_leaf = 5;
  int mtry = -1;          // -1 resolves to ceil(p / 3) at fit time; 0 = all
  bool bootstrap = true;  // off + n_trees=1 + mtry=0 degenerates to a CART
};

class RandomForest {
 public:
  /// Tree t draws its bootstrap and split candidates from a stream derived
  /// from (seed, t), so the forest is reproducible under any scheduling.
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& cfg,
           std::uint64_t seed, int threads = 1);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return !trees_.empty(); }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  int resolved_mtry() const { return resolved_mtry_; }

  /// Mean out-of-bag prediction per training row; rows in every bootstrap
  /// have no value. Populated by fit when bootstrapping.
  const std::vector<std::optional<double>>& oob_predictions() const { return oob_; }

  /// Per-feature importance fractions (summed variance reductions over all
  /// trees, normalized to 1). Throws when the forest never split or is
  /// untrained.
  std::vector<double> feature_importances() const;

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<RegressionTree> trees_;
  std::vector<std::optional<double>> oob_;
  int resolved_mtry_ = 0;
  Eigen::Index n_features_ = 0;
};

}  // namespace linkvol::model
