#include "linkvol/eval/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "linkvol/common/hash.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/common/parallel.hpp"
#include "linkvol/common/rng.hpp"

namespace linkvol::eval {

namespace {

using nlohmann::json;

using KeyToRow = std::map<std::pair<std::string, std::int64_t>, std::size_t>;

std::size_t row_of(const KeyToRow& index, const SiteDateKey& key) {
  const auto it = index.find({key.first, key.second.serial()});
  if (it == index.end()) {
    throw std::invalid_argument("benchmark: plan row (" + key.first + ", " +
                                key.second.to_string() + ") is not in the matrix");
  }
  return it->second;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& y, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

Metrics mean_of(const std::vector<Metrics>& ms) {
  Metrics out;
  for (const auto& m : ms) {
    out.r2 += m.r2;
    out.mae += m.mae;
    out.rmse += m.rmse;
  }
  const auto n = static_cast<double>(ms.size());
  out.r2 /= n;
  out.mae /= n;
  out.rmse /= n;
  return out;
}

Metrics std_of(const std::vector<Metrics>& ms, const Metrics& mean) {
  Metrics out;
  for (const auto& m : ms) {
    out.r2 += (m.r2 - mean.r2) * (m.r2 - mean.r2);
    out.mae += (m.mae - mean.mae) * (m.mae - mean.mae);
    out.rmse += (m.rmse - mean.rmse) * (m.rmse - mean.rmse);
  }
  const auto n = static_cast<double>(ms.size());
  out.r2 = std::sqrt(out.r2 / n);
  out.mae = std::sqrt(out.mae / n);
  out.rmse = std::sqrt(out.rmse / n);
  return out;
}

std::vector<std::string> make_labels(const std::vector<model::ModelSpec>& specs) {
  std::map<std::string, int> seen;
  std::vector<std::string> labels;
  for (const auto& s : specs) {
    const int n = ++seen[s.family];
    labels.push_back(n == 1 ? s.family : s.family + "_" + std::to_string(n));
  }
  return labels;
}

}  // namespace

BenchmarkReport benchmark(const feat::FeatureMatrix& m, const FoldPlan& plan,
                          const std::vector<model::ModelSpec>& specs,
                          const BenchmarkOptions& opt) {
  if (!m.has_target) throw std::invalid_argument("benchmark: matrix has no target");
  if (specs.empty()) throw std::invalid_argument("benchmark: no families requested");
  plan.check();

  BenchmarkReport rep;
  rep.seed = opt.seed;
  rep.plan = plan;

  // (site, date) -> matrix row. Plans address rows by key, which only works
  // when keys are unique.
  KeyToRow index;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto key = std::make_pair(m.row_sites[i], m.keys[i].date.serial());
    if (!index.emplace(key, i).second) {
      throw std::invalid_argument("benchmark: duplicate (site, date) row " + m.row_sites[i] +
                                  ", " + m.keys[i].date.to_string());
    }
  }

  const std::set<std::string> train_sites(plan.train_sites.begin(), plan.train_sites.end());
  const std::set<std::string> test_sites(plan.test_sites.begin(), plan.test_sites.end());
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (train_sites.count(m.row_sites[i])) {
      train_rows.push_back(i);
    } else if (test_sites.count(m.row_sites[i])) {
      test_rows.push_back(i);
    } else {
      throw std::invalid_argument("benchmark: site '" + m.row_sites[i] +
                                  "' is on neither side of the plan's split");
    }
  }
  if (train_rows.empty() || test_rows.empty()) {
    throw std::invalid_argument("benchmark: a side of the split has no rows");
  }

  for (const auto i : train_rows) rep.train_keys.emplace_back(m.row_sites[i], m.keys[i].date);
  for (const auto i : test_rows) rep.test_keys.emplace_back(m.row_sites[i], m.keys[i].date);

  const Eigen::MatrixXd Xtr = take_rows(m.X, train_rows);
  const Eigen::VectorXd ytr = take(m.y, train_rows);
  const Eigen::MatrixXd Xte = take_rows(m.X, test_rows);
  const Eigen::VectorXd yte = take(m.y, test_rows);
  rep.test_truth.assign(yte.data(), yte.data() + yte.size());

  // Per-fold row indices, resolved once.
  const auto k = static_cast<std::size_t>(plan.k);
  std::vector<std::vector<std::size_t>> fold_train(k), fold_validate(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (const auto& key : plan.folds[f].train_keys) {
      fold_train[f].push_back(row_of(index, key));
    }
    for (const auto& key : plan.folds[f].validate_keys) {
      const std::size_t r = row_of(index, key);
      fold_validate[f].push_back(r);
      rep.cv_keys.emplace_back(m.row_sites[r], m.keys[r].date);
      rep.cv_fold_of.push_back(static_cast<int>(f));
      rep.cv_truth.push_back(m.y(static_cast<Eigen::Index>(r)));
    }
  }

  const auto labels = make_labels(specs);

  for (std::size_t fi = 0; fi < specs.size(); ++fi) {
    FamilyOutcome out;
    out.label = labels[fi];
    out.spec = specs[fi];
    const std::uint64_t family_seed = derive_seed(derive_seed(opt.seed, 0xbe7cull), fi);

    model::ModelSpec spec;
    try {
      spec = model::resolve_spec(specs[fi], m);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = std::string("resolve: ") + e.what();
      rep.families.push_back(std::move(out));
      continue;
    }

    // Full fit on the training rows; scored there and on the held-out sites.
    std::string full_error;
    try {
      auto learner = model::train_learner(Xtr, ytr, spec, derive_seed(family_seed, 0xa11ull),
                                          opt.threads, &out.resolved_config);
      out.training = compute_metrics(ytr, learner->predict(Xtr));
      const Eigen::VectorXd pred = learner->predict(Xte);
      out.testing = compute_metrics(yte, pred);
      out.test_pred.assign(pred.data(), pred.data() + pred.size());
    } catch (const std::exception& e) {
      full_error = e.what();
    }

    // Fold results land in indexed slots so failure messages and predictions
    // are identical for any thread count.
    struct FoldOut {
      bool ok = false;
      std::string error;
      Metrics metrics;
      std::vector<double> pred;
    };
    std::vector<FoldOut> fouts(k);
    parallel_for(k, opt.threads, [&](std::size_t f) {
      auto& fo = fouts[f];
      try {
        const Eigen::MatrixXd Xf = take_rows(m.X, fold_train[f]);
        const Eigen::VectorXd yf = take(m.y, fold_train[f]);
        const Eigen::MatrixXd Xv = take_rows(m.X, fold_validate[f]);
        const Eigen::VectorXd yv = take(m.y, fold_validate[f]);
        auto learner = model::train_learner(Xf, yf, spec, derive_seed(family_seed, f), 1);
        const Eigen::VectorXd pred = learner->predict(Xv);
        fo.metrics = compute_metrics(yv, pred);
        fo.pred.assign(pred.data(), pred.data() + pred.size());
        fo.ok = true;
      } catch (const std::exception& e) {
        fo.error = e.what();
      }
    });

    if (!full_error.empty()) {
      out.failed = true;
      out.error = "full fit: " + full_error;
    } else {
      for (std::size_t f = 0; f < k && !out.failed; ++f) {
        if (!fouts[f].ok) {
          out.failed = true;
          out.error = "fold " + std::to_string(f) + ": " + fouts[f].error;
        }
      }
    }
    if (!out.failed) {
      std::vector<Metrics> per_fold;
      for (const auto& fo : fouts) {
        per_fold.push_back(fo.metrics);
        out.cv_pred.insert(out.cv_pred.end(), fo.pred.begin(), fo.pred.end());
      }
      out.cv_mean = mean_of(per_fold);
      out.cv_std = std_of(per_fold, out.cv_mean);
    }
    rep.families.push_back(std::move(out));
  }

  return rep;
}

std::string BenchmarkReport::metrics_csv() const {
  CsvWriter w({"family", "phase", "r2", "mae", "rmse", "note"});
  for (const auto& f : families) {
    if (f.failed) {
      w.field(f.label);
      w.field("failed");
      w.field("");
      w.field("");
      w.field("");
      w.field(f.error);
      w.end_row();
      continue;
    }
    const auto emit = [&](const char* phase, const Metrics& m) {
      w.field(f.label);
      w.field(phase);
      w.field(m.r2);
      w.field(m.mae);
      w.field(m.rmse);
      w.field("");
      w.end_row();
    };
    emit("training", f.training);
    emit("cv_mean", f.cv_mean);
    emit("cv_std", f.cv_std);
    emit("testing", f.testing);
  }
  return w.str();
}

namespace {

std::string predictions_csv(const std::vector<SiteDateKey>& keys, const std::vector<int>* fold_of,
                            const std::vector<double>& truth,
                            const std::vector<FamilyOutcome>& families,
                            const std::vector<const std::vector<double>*>& preds) {
  std::vector<std::string> header;
  if (fold_of) header.push_back("fold");
  header.insert(header.end(), {"site_id", "date", "truth"});
  for (const auto& f : families) header.push_back(f.label);
  CsvWriter w(header);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (fold_of) w.field(static_cast<std::int64_t>((*fold_of)[i]));
    w.field(keys[i].first);
    w.field(keys[i].second.to_string());
    w.field(truth[i]);
    for (std::size_t fi = 0; fi < families.size(); ++fi) {
      if (families[fi].failed) {
        w.field("");
      } else {
        w.field((*preds[fi])[i]);
      }
    }
    w.end_row();
  }
  return w.str();
}

}  // namespace

std::string BenchmarkReport::test_predictions_csv() const {
  std::vector<const std::vector<double>*> preds;
  for (const auto& f : families) preds.push_back(&f.test_pred);
  return predictions_csv(test_keys, nullptr, test_truth, families, preds);
}

std::string BenchmarkReport::cv_predictions_csv() const {
  std::vector<const std::vector<double>*> preds;
  for (const auto& f : families) preds.push_back(&f.cv_pred);
  return predictions_csv(cv_keys, &cv_fold_of, cv_truth, families, preds);
}

json BenchmarkReport::provenance() const {
  json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  j["fold_rule"] =
      "sites shuffled into k near-equal groups, distinct dates cut into k contiguous "
      "blocks; fold i validates all rows of site group i and trains only on rows whose "
      "site and date both lie outside group/block i";
  j["cv_std"] = "population standard deviation across folds";
  j["plan"] = plan.to_json();

  json tr = json::array(), te = json::array();
  for (const auto& [site, date] : train_keys) tr.push_back({site, date.to_string()});
  for (const auto& [site, date] : test_keys) te.push_back({site, date.to_string()});
  j["train_keys"] = tr;
  j["test_keys"] = te;

  json fams = json::array();
  std::string config_blob;
  for (const auto& f : families) {
    json fj;
    fj["label"] = f.label;
    fj["family"] = f.spec.family;
    fj["requested"] = f.spec.params;
    fj["resolved"] = f.resolved_config;
    fj["failed"] = f.failed;
    if (f.failed) fj["error"] = f.error;
    json phases = json::array();
    phases.push_back({{"phase", "training"}, {"fit_keys", "train_keys"},
                      {"scored_keys", "train_keys"}});
    for (int f2 = 0; f2 < plan.k; ++f2) {
      phases.push_back({{"phase", "cv"},
                        {"fold", f2},
                        {"fit_keys", "plan.folds[" + std::to_string(f2) + "].train_keys"},
                        {"scored_keys", "plan.folds[" + std::to_string(f2) + "].validate_keys"}});
    }
    phases.push_back(
        {{"phase", "testing"}, {"fit_keys", "train_keys"}, {"scored_keys", "test_keys"}});
    fj["phases"] = phases;
    fams.push_back(fj);
    config_blob += f.spec.to_json().dump();
    config_blob += '\n';
  }
  j["families"] = fams;
  j["config_digest"] = to_hex(fnv1a64(config_blob + std::to_string(plan.k)));
  return j;
}

}  // namespace linkvol::eval
