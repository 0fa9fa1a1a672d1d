#include "linkvol/model/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace linkvol::model {

struct RegressionTree::BuildCtx {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const TreeConfig& cfg;
  Rng* rng;
  double n_total;
  std::vector<std::int64_t> scratch;  // sort buffer reused across nodes
};

void RegressionTree::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const TreeConfig& cfg, Rng* rng) {
  std::vector<std::int64_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  fit_rows(X, y, rows, cfg, rng);
}

void RegressionTree::fit_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const std::vector<std::int64_t>& rows, const TreeConfig& cfg,
                              Rng* rng) {
  if (rows.empty()) throw std::invalid_argument("tree: no training rows");
  if (X.rows() != y.size()) throw std::invalid_argument("tree: X/y row mismatch");
  if (cfg.min_samples_leaf < 1) throw std::invalid_argument("tree: min_samples_leaf must be >= 1");
  if (cfg.mtry > X.cols()) {
    throw std::invalid_argument("tree: mtry exceeds the feature count");
  }
  feature_.clear();
  threshold_.clear();
  left_.clear();
  right_.clear();
  value_.clear();
  n_.clear();
  importance_.assign(static_cast<std::size_t>(X.cols()), 0.0);

  BuildCtx ctx{X, y, cfg, rng, static_cast<double>(rows.size()), {}};
  std::vector<std::int64_t> work = rows;
  build(ctx, work, 0, work.size(), 0);
}

std::int64_t RegressionTree::build(BuildCtx& ctx, std::vector<std::int64_t>& rows,
                                   std::size_t lo, std::size_t hi, int depth) {
  const std::size_t m = hi - lo;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double v = ctx.y(rows[i]);
    sum += v;
    sum_sq += v * v;
  }
  const double node_mean = sum / static_cast<double>(m);
  const double node_sse = std::max(0.0, sum_sq - sum * sum / static_cast<double>(m));

  const auto id = static_cast<std::int64_t>(feature_.size());
  feature_.push_back(-1);
  threshold_.push_back(0.0);
  left_.push_back(-1);
  right_.push_back(-1);
  value_.push_back(node_mean);
  n_.push_back(static_cast<std::int64_t>(m));

  const bool depth_ok = ctx.cfg.max_depth <= 0 || depth < ctx.cfg.max_depth;
  const auto min_leaf = static_cast<std::size_t>(ctx.cfg.min_samples_leaf);
  if (!depth_ok || m < 2 * min_leaf || node_sse <= 1e-12 * (1.0 + sum_sq)) return id;

  // Candidate features, sorted so the scan order (and tie-breaking) is
  // canonical no matter how the subset was sampled.
  std::vector<std::size_t> candidates;
  const auto p = static_cast<std::size_t>(ctx.X.cols());
  if (ctx.cfg.mtry > 0 && static_cast<std::size_t>(ctx.cfg.mtry) < p) {
    if (!ctx.rng) throw std::invalid_argument("tree: mtry sampling needs an RNG");
    candidates = ctx.rng->sample_without_replacement(p, static_cast<std::size_t>(ctx.cfg.mtry));
    std::sort(candidates.begin(), candidates.end());
  } else {
    candidates.resize(p);
    std::iota(candidates.begin(), candidates.end(), 0);
  }

  // Any admissible boundary is accepted even at zero reduction (a non-pure
  // node keeps splitting, which is what lets depth 2 solve XOR-style
  // targets); ties keep the first candidate in canonical order.
  double best_reduction = -std::numeric_limits<double>::infinity();
  std::int32_t best_feature = -1;
  double best_threshold = 0.0;

  auto& sorted = ctx.scratch;
  for (const std::size_t f : candidates) {
    sorted.assign(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                  rows.begin() + static_cast<std::ptrdiff_t>(hi));
    const auto fc = static_cast<Eigen::Index>(f);
    std::sort(sorted.begin(), sorted.end(), [&](std::int64_t a, std::int64_t b) {
      return ctx.X(a, fc) < ctx.X(b, fc);
    });
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
      const double v = ctx.y(sorted[k - 1]);
      left_sum += v;
      left_sq += v * v;
      if (k < min_leaf || m - k < min_leaf) continue;
      const double xa = ctx.X(sorted[k - 1], fc);
      const double xb = ctx.X(sorted[k], fc);
      if (xa == xb) continue;  // cannot split between equal values
      const double right_sum = sum - left_sum;
      const double right_sq = sum_sq - left_sq;
      const double sse_l = left_sq - left_sum * left_sum / static_cast<double>(k);
      const double sse_r = right_sq - right_sum * right_sum / static_cast<double>(m - k);
      const double reduction = node_sse - sse_l - sse_r;
      if (reduction > best_reduction) {
        best_reduction = reduction;
        best_feature = static_cast<std::int32_t>(f);
        best_threshold = xa + (xb - xa) / 2.0;
      }
    }
  }

  if (best_feature < 0) return id;  // no admissible split improves anything

  const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                                  rows.begin() + static_cast<std::ptrdiff_t>(hi),
                                  [&](std::int64_t r) {
                                    return ctx.X(r, best_feature) <= best_threshold;
                                  });
  const auto split = static_cast<std::size_t>(mid - rows.begin());
  feature_[static_cast<std::size_t>(id)] = best_feature;
  threshold_[static_cast<std::size_t>(id)] = best_threshold;
  importance_[static_cast<std::size_t>(best_feature)] +=
      std::max(0.0, best_reduction) / ctx.n_total;
  left_[static_cast<std::size_t>(id)] = build(ctx, rows, lo, split, depth + 1);
  right_[static_cast<std::size_t>(id)] = build(ctx, rows, split, hi, depth + 1);
  return id;
}

double RegressionTree::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained()) throw std::logic_error("tree: predict before fit");
  std::int64_t node = 0;
  while (feature_[static_cast<std::size_t>(node)] >= 0) {
    const auto i = static_cast<std::size_t>(node);
    node = x(feature_[i]) <= threshold_[i] ? left_[i] : right_[i];
  }
  return value_[static_cast<std::size_t>(node)];
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
  return out;
}

nlohmann::json RegressionTree::to_json() const {
  nlohmann::json j;
  j["feature"] = feature_;
  j["threshold"] = threshold_;
  j["left"] = left_;
  j["right"] = right_;
  j["value"] = value_;
  j["n"] = n_;
  j["importance"] = importance_;
  return j;
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree t;
  t.feature_ = j.at("feature").get<std::vector<std::int32_t>>();
  t.threshold_ = j.at("threshold").get<std::vector<double>>();
  t.left_ = j.at("left").get<std::vector<std::int64_t>>();
  t.right_ = j.at("right").get<std::vector<std::int64_t>>();
  t.value_ = j.at("value").get<std::vector<double>>();
  t.n_ = j.at("n").get<std::vector<std::int64_t>>();
  t.importance_ = j.at("importance").get<std::vector<double>>();
  return t;
}

}  // namespace linkvol::model
