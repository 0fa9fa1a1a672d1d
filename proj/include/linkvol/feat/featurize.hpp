#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linkvol/data/records.hpp"

namespace linkvol::feat {

struct RowKey {
  std::string link_id;
  Date date;
};

// Immutable (link, date) design matrix. Rows are sorted by (link_id, date,
// site_id) so identical inputs give identical bytes. The target, when
// present, aligns 1:1 with rows; row_sites carries the count site per
// training row (empty string on inference rows) for the spatial splits.
struct FeatureMatrix {
  std::vector<std::string> schema;
  std::vector<RowKey> keys;
  std::vector<std::string> row_sites;
  Eigen::MatrixXd X;   // keys.size() x schema.size()
  Eigen::VectorXd y;   // empty unless has_target
  bool has_target = false;
  std::uint64_t schema_hash = 0;

  std::size_t rows() const { return keys.size(); }
  std::size_t cols() const { return schema.size(); }
  std::size_t col(const std::string& feature) const;  // throws naming the feature
};

std::uint64_t schema_digest(const std::vector<std::string>& schema);

/// Keeps the named columns (in the given order); keys/target carry over.
FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::string>& features);

void write_matrix_csv(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(const std::string& path);

// Every feature the assembler can produce, in canonical order.
const std::vector<std::string>& feature_canon();

/// Named subsets: walk_full, cycle_full (the screened candidate lists) and
/// walk_final, cycle_final (the kept model variables), ranked as reported.
const std::vector<std::string>& named_feature_set(const std::string& name);

struct BuildReport {
  std::size_t rows_emitted = 0;
  std::size_t count_rows_seen = 0;        // training mode only
  std::size_t censored_rows = 0;          // counts without a third-party join
  std::size_t imputed_carry_forward = 0;  // previous value <= 7 days old
  std::size_t imputed_station_mean = 0;
  std::size_t imputed_global_mean = 0;
  std::map<std::string, std::size_t> imputed_by_variable;

  std::string to_json() const;
};

struct Sources {
  const std::vector<data::LinkRecord>* links = nullptr;
  const std::vector<data::ZoneRecord>* zones = nullptr;
  const std::vector<data::LgaRecord>* lgas = nullptr;
  const std::vector<data::StationObservation>* station_obs = nullptr;
  const std::vector<data::ThirdPartyCount>* third_party = nullptr;
  const std::vector<data::CountObservation>* counts = nullptr;  // training only
};

// Assembly is a pure function of sources + schema: one row per count
// observation that joins a third-party value (training) or per third-party
// coverage row (inference). Missing daily station values fall back to
// carry-forward (max 7 days), then the station's historical mean, then the
// global variable mean; every imputed cell is counted in the report.
// A schema feature with no upstream source at all throws, naming it.
FeatureMatrix build_training_matrix(const Sources& src, data::Mode mode,
                                    const std::vector<std::string>& schema,
                                    BuildReport* report = nullptr);

FeatureMatrix build_inference_matrix(const Sources& src, data::Mode mode,
                                     const std::vector<std::string>& schema,
                                     BuildReport* report = nullptr);

// Calendar flags, exposed for direct testing.
bool is_pre_covid(const Date& d);
bool is_covid_lockdown(const Date& d);

}  // namespace linkvol::feat
