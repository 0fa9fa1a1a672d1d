#include "linkvol/model/gnb.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace linkvol::model {

void GnbBinned::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GnbConfig& cfg) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = X.cols();
  if (cfg.n_bins < 2) throw std::invalid_argument("gnb: need n_bins >= 2");
  if (n == 0) throw std::invalid_argument("gnb: no training rows");
  if (static_cast<std::size_t>(cfg.n_bins) >= n) {
    throw std::invalid_argument("gnb: one row per bin is degenerate; lower n_bins");
  }
  std::set<double> distinct(y.data(), y.data() + y.size());
  if (distinct.size() < static_cast<std::size_t>(cfg.n_bins)) {
    throw std::invalid_argument("gnb: fewer distinct target values than bins");
  }

  // Equal-frequency edges over the sorted target; ties collapse onto the
  // same side of an edge because assignment is by value, not rank.
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<std::size_t>(cfg.n_bins);
  std::vector<double> edges;  // k-1 interior edges; bin b = (edge[b-1], edge[b]]
  for (std::size_t b = 1; b < k; ++b) {
    edges.push_back(sorted[b * n / k]);
  }
  const auto bin_of = [&](double v) {
    std::size_t b = 0;
    while (b < edges.size() && v > edges[b]) ++b;
    return b;
  };

  std::vector<std::vector<Eigen::Index>> members(k);
  for (Eigen::Index i = 0; i < y.size(); ++i) members[bin_of(y(i))].push_back(i);

  // Per-feature overall variance scales the floor.
  Eigen::VectorXd overall_var(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = X.col(j).mean();
    overall_var(j) = (X.col(j).array() - mean).square().sum() / static_cast<double>(n);
  }

  priors_.clear();
  bin_target_mean_.clear();
  feat_mean_.clear();
  feat_var_.clear();
  floored_bins_.clear();
  for (std::size_t b = 0; b < k; ++b) {
    const auto& rows = members[b];
    if (rows.empty()) {
      // Heavy ties can starve a bin; fold it away rather than divide by zero.
      continue;
    }
    const double m = static_cast<double>(rows.size());
    priors_.push_back(m / static_cast<double>(n));
    double ymean = 0.0;
    for (const auto r : rows) ymean += y(r);
    bin_target_mean_.push_back(ymean / m);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(p), var = Eigen::VectorXd::Zero(p);
    for (const auto r : rows) mu += X.row(r).transpose();
    mu /= m;
    for (const auto r : rows) {
      var += (X.row(r).transpose() - mu).cwiseAbs2();
    }
    var /= m;
    bool all_floored = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double floor = cfg.var_floor * (overall_var(j) > 0.0 ? overall_var(j) : 1.0);
      if (var(j) < floor) {
        var(j) = floor;
      } else {
        all_floored = false;
      }
    }
    if (all_floored) floored_bins_.push_back(static_cast<int>(feat_mean_.size()));
    feat_mean_.push_back(std::move(mu));
    feat_var_.push_back(std::move(var));
  }
  if (priors_.size() < 2) throw std::invalid_argument("gnb: target ties left fewer than 2 bins");
}

double GnbBinned::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained()) throw std::logic_error("gnb: predict before fit");
  const std::size_t k = priors_.size();
  std::vector<double> logpost(k);
  for (std::size_t b = 0; b < k; ++b) {
    double lp = std::log(priors_[b]);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double d = x(j) - feat_mean_[b](j);
      lp += -0.5 * std::log(2.0 * M_PI * feat_var_[b](j)) - d * d / (2.0 * feat_var_[b](j));
    }
    logpost[b] = lp;
  }
  const double mx = *std::max_element(logpost.begin(), logpost.end());
  double z = 0.0;
  for (double& lp : logpost) {
    lp = std::exp(lp - mx);
    z += lp;
  }
  double out = 0.0;
  for (std::size_t b = 0; b < k; ++b) out += (logpost[b] / z) * bin_target_mean_[b];
  return out;
}

Eigen::VectorXd GnbBinned::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.row(i));
  return out;
}

nlohmann::json GnbBinned::to_json() const {
  nlohmann::json j;
  j["priors"] = priors_;
  j["bin_target_mean"] = bin_target_mean_;
  j["floored_bins"] = floored_bins_;
  auto dump = [](const std::vector<Eigen::VectorXd>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : vs) {
      arr.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    }
    return arr;
  };
  j["feat_mean"] = dump(feat_mean_);
  j["feat_var"] = dump(feat_var_);
  return j;
}

GnbBinned GnbBinned::from_json(const nlohmann::json& j) {
  GnbBinned g;
  g.priors_ = j.at("priors").get<std::vector<double>>();
  g.bin_target_mean_ = j.at("bin_target_mean").get<std::vector<double>>();
  g.floored_bins_ = j.at("floored_bins").get<std::vector<int>>();
  auto load = [](const nlohmann::json& arr) {
    std::vector<Eigen::VectorXd> vs;
    for (const auto& vj : arr) {
      const auto v = vj.get<std::vector<double>>();
      vs.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return vs;
  };
  g.feat_mean_ = load(j.at("feat_mean"));
  g.feat_var_ = load(j.at("feat_var"));
  return g;
}

}  // namespace linkvol::model
