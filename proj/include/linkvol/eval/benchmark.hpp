#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "linkvol/eval/folds.hpp"
#include "linkvol/eval/metrics.hpp"
#include "linkvol/feat/featurize.hpp"
#include "linkvol/model/train.hpp"

namespace linkvol::eval {

struct BenchmarkOptions {
  std::uint64_t seed = 0;
  int threads = 1;
};

// One benchmarked family. A failure anywhere (full fit, any fold, metric
// computation) marks the row failed with the first error in phase order;
// the run continues with the other families.
struct FamilyOutcome {
  std::string label;  // family name, suffixed when a family appears twice
  model::ModelSpec spec;
  bool failed = false;
  std::string error;
  nlohmann::json resolved_config;
  Metrics training;            // fit + scored on all training rows
  Metrics cv_mean, cv_std;     // across folds; std is the population std
  Metrics testing;             // held-out spatial test sites
  std::vector<double> test_pred;  // aligned with BenchmarkReport::test_keys
  std::vector<double> cv_pred;    // aligned with BenchmarkReport::cv_keys
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  FoldPlan plan;
  std::vector<SiteDateKey> train_keys;  // all training rows, matrix order
  std::vector<SiteDateKey> test_keys;   // held-out rows, matrix order
  std::vector<double> test_truth;
  std::vector<SiteDateKey> cv_keys;  // fold 0 validate rows, then fold 1, ...
  std::vector<int> cv_fold_of;
  std::vector<double> cv_truth;
  std::vector<FamilyOutcome> families;

  /// family x phase x (r2, mae, rmse); failed families carry the error text.
  std::string metrics_csv() const;

  /// Held-out predictions keyed by (site, date), one column per family.
  std::string test_predictions_csv() const;

  /// Fold validation predictions keyed by (site, date) with the fold index.
  std::string cv_predictions_csv() const;

  /// Split membership, seeds, resolved configs, and per-phase fit/score key
  /// references — enough to verify fit/score disjointness mechanically.
  nlohmann::json provenance() const;
};

/// Runs every spec through the same plan: fit on all training rows, k-fold
/// cross-validation, and a final score on the held-out test sites.
/// Deterministic in (matrix, plan, specs, seed); thread count never changes
/// any output byte.
BenchmarkReport benchmark(const feat::FeatureMatrix& m, const FoldPlan& plan,
                          const std::vector<model::ModelSpec>& specs,
                          const BenchmarkOptions& opt);

}  // namespace linkvol::eval
