#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "linkvol/common/date.hpp"
#include "linkvol/feat/featurize.hpp"

namespace linkvol::eval {

using SiteDateKey = std::pair<std::string, Date>;

// One cross-validation fold over the training rows. Validation rows are the
// rows of one site group; training rows come from the other site groups AND
// from outside the fold's held date block, so every fold scores a model on
// locations and dates it never saw.
struct Fold {
  std::vector<std::string> validate_sites;  // sorted site group
  std::vector<Date> held_dates;             // contiguous date block
  std::vector<SiteDateKey> train_keys;
  std::vector<SiteDateKey> validate_keys;
};

struct FoldPlan {
  std::uint64_t seed = 0;
  int k = 0;
  std::vector<std::string> train_sites;  // sorted
  std::vector<std::string> test_sites;   // sorted
  std::vector<Fold> folds;

  /// Throws if the invariants are broken: sides share a site, a fold trains
  /// on a validate site or a held date, or validate sets fail to partition
  /// the training rows.
  void check() const;

  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

/// Site-level random split: every row of a site lands wholly on one side.
/// Deterministic in (sites, test_fraction, seed); duplicates in `sites` are
/// collapsed. Throws when a side would be empty.
std::pair<std::vector<std::string>, std::vector<std::string>> spatial_split(
    const std::vector<std::string>& sites, double test_fraction, std::uint64_t seed);

/// Joint spatio-temporal folds over training rows keyed by (site, date):
/// sites are shuffled into k near-equal groups, distinct dates are cut into
/// k contiguous blocks; fold i validates all rows of site group i and trains
/// on rows whose site and date both lie outside group/block i. Validation
/// sets therefore partition the rows.
std::vector<Fold> spatio_temporal_folds(const std::vector<SiteDateKey>& rows, int k,
                                        std::uint64_t seed);

/// Convenience wrapper: spatial test split over the matrix's sites, then
/// k folds over the remaining training rows.
FoldPlan make_fold_plan(const feat::FeatureMatrix& m, double test_fraction, int k,
                        std::uint64_t seed);

}  // namespace linkvol::eval
