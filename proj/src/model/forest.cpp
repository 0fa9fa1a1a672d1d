#include "linkvol/model/forest.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "linkvol/common/parallel.hpp"

namespace linkvol::model {

void RandomForest::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const ForestConfig& cfg, std::uint64_t seed, int threads) {
  if (cfg.n_trees < 1) throw std::invalid_argument("forest: need n_trees >= 1");
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = X.cols();
  if (n == 0) throw std::invalid_argument("forest: no training rows");
  resolved_mtry_ = cfg.mtry < 0
                       ? static_cast<int>((p + 2) / 3)  // ceil(p / 3)
                       : cfg.mtry;
  if (resolved_mtry_ > p) throw std::invalid_argument("forest: mtry exceeds the feature count");
  n_features_ = p;

  TreeConfig tree_cfg{cfg.max_depth, cfg.min_samples_leaf, resolved_mtry_};
  trees_.assign(static_cast<std::size_t>(cfg.n_trees), {});
  std::vector<std::vector<char>> in_bag(trees_.size());

  parallel_for(trees_.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::int64_t> rows;
    rows.reserve(n);
    if (cfg.bootstrap) {
      in_bag[t].assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(rng.bounded(n));
        rows.push_back(static_cast<std::int64_t>(r));
        in_bag[t][r] = 1;
      }
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees_[t].fit_rows(X, y, rows, tree_cfg, &rng);
  });

  oob_.assign(n, std::nullopt);
  if (cfg.bootstrap) {
    std::vector<double> sum(n, 0.0);
    std::vector<int> cnt(n, 0);
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!in_bag[t][i]) {
          sum[i] += trees_[t].predict_row(X.row(static_cast<Eigen::Index>(i)));
          ++cnt[i];
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (cnt[i] > 0) oob_[i] = sum[i] / cnt[i];
    }
  }
}

double RandomForest::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained()) throw std::logic_error("forest: predict before fit");
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict_row(x);
  return sum / static_cast<double>(trees_.size());
}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
  return out;
}

std::vector<double> RandomForest::feature_importances() const {
  if (!trained()) throw std::logic_error("forest: importances before fit");
  std::vector<double> total(static_cast<std::size_t>(n_features_), 0.0);
  for (const auto& t : trees_) {
    const auto& raw = t.importance_raw();
    for (std::size_t f = 0; f < raw.size(); ++f) total[f] += raw[f];
  }
  double sum = 0.0;
  for (const double v : total) sum += v;
  if (sum <= 0.0) {
    throw std::logic_error("forest: no split reduced variance; importances undefined");
  }
  for (double& v : total) v /= sum;
  return total;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json j;
  j["n_features"] = n_features_;
  j["resolved_mtry"] = resolved_mtry_;
  auto& arr = j["trees"] = nlohmann::json::array();
  for (const auto& t : trees_) arr.push_back(t.to_json());
  return j;
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f;
  f.n_features_ = j.at("n_features").get<Eigen::Index>();
  f.resolved_mtry_ = j.at("resolved_mtry").get<int>();
  for (const auto& tj : j.at("trees")) f.trees_.push_back(RegressionTree::from_json(tj));
  return f;
}

}  // namespace linkvol::model
