#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "linkvol/common/rng.hpp"

namespace linkvol::model {

struct TreeConfig {
  int max_depth = 12;  // <= 0 means unlimited
  int min_samples_leaf = 5;
  int mtry = 0;        // candidate features per split; 0 means all
};

// Greedy binary regression tree, squared-error splits, leaves predict node
// means. Stored as flat parallel arrays so serialization is trivial and
// prediction is a tight loop.
class RegressionTree {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeConfig& cfg,
           Rng* rng = nullptr);

  /// Like fit but restricted to the given rows (bootstrap support).
  void fit_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<std::int64_t>& rows, const TreeConfig& cfg,
                Rng* rng = nullptr);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return !feature_.empty(); }
  std::size_t node_count() const { return feature_.size(); }

  /// Per-feature sums of SSE reduction over this tree's splits, divided by
  /// the training row count (node-weighted variance reductions).
  const std::vector<double>& importance_raw() const { return importance_; }

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  struct BuildCtx;
  std::int64_t build(BuildCtx& ctx, std::vector<std::int64_t>& rows, std::size_t lo,
                     std::size_t hi, int depth);

  // feature_[i] == -1 marks a leaf; value_ holds leaf predictions only there.
  std::vector<std::int32_t> feature_;
  std::vector<double> threshold_;
  std::vector<std::int64_t> left_;
  std::vector<std::int64_t> right_;
  std::vector<double> value_;
  std::vector<std::int64_t> n_;
  std::vector<double> importance_;
};

}  // namespace linkvol::model
