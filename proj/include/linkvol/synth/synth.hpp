#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "linkvol/data/records.hpp"
#include "linkvol/infer/infer.hpp"

namespace linkvol::synth {

// A generated world with known ground truth. True daily volumes follow a
// log-linear model over the same features the assembler later rebuilds, so
// a pipeline that works recovers the planted structure.
struct SynthConfig {
  int n_links = 400;
  int n_zones = 24;
  int n_stations = 6;  // split between weather and air kinds
  int n_sites = 40;    // official count locations
  Date start_date = Date(2020, 1, 15);
  Date end_date = Date(2020, 3, 31);
  data::Mode mode = data::Mode::walk;

  double planted_beta = 3.16;   // true volume / third-party count
  double noise_sigma = 0.15;    // third-party multiplicative noise; 0 = exact
  double censor_threshold = 5;  // third-party rows below this are dropped
  std::map<std::string, double> feature_effect_weights;  // empty = defaults

  double base_log_volume = 5.5;
  double extreme_fraction = 0.10;          // links with suppressed counts
  double extreme_log_factor = 2.0794415416798357;  // ln 8
  double extreme_log_sigma = 0.25;
  std::string site_selection = "volume_biased";  // or "uniform"
  double missing_obs_rate = 0.02;

  std::uint64_t seed = 0;

  void check() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

/// Effects used when feature_effect_weights is empty. Weights apply to
/// z-scored features inside the log-volume model.
const std::map<std::string, double>& default_effect_weights();

struct WorldBundle {
  SynthConfig config;
  std::vector<data::LinkRecord> links;
  std::vector<data::ZoneRecord> zones;
  std::vector<data::LgaRecord> lgas;
  std::vector<data::StationSite> stations;
  std::vector<data::StationObservation> station_obs;
  std::vector<data::CountObservation> counts;
  std::vector<data::ThirdPartyCount> third_party;

  // Ground truth, never fed to the pipeline.
  std::map<std::pair<std::string, std::int64_t>, double> true_volume;  // (link, date serial)
  std::set<std::string> extreme_links;
};

WorldBundle generate_world(const SynthConfig& config);

/// Writes the bundle in the standard input formats plus truth files and a
/// manifest (seed, config, per-file digests). Same seed, same bytes.
void write_bundle(const WorldBundle& bundle, const std::string& dir);

// Truth as written by write_bundle, for recovery scoring.
struct TruthTable {
  std::uint64_t seed = 0;
  double planted_beta = 0.0;
  std::map<std::pair<std::string, std::int64_t>, double> volume;
  std::set<std::string> extreme_links;
};

TruthTable read_truth(const std::string& dir);

struct OracleInputs {
  std::uint64_t seed = 0;            // seed the pipeline ran with
  double fitted_base_beta = 0.0;
  const std::vector<infer::InferenceResult>* results = nullptr;
  const std::map<std::string, double>* length_km = nullptr;
  infer::TripTotals aggregate;       // pipeline-reported totals
  infer::AggregationParams params;
  std::map<std::string, double> family_test_r2;  // optional benchmark column
};

/// Recovery metrics against ground truth: base-slope error, link-level R^2
/// of mitigated estimates vs true volumes, aggregate-trip recovery over the
/// same rows, and outlier precision/recall against the planted extremes.
/// Throws when the pipeline seed differs from the truth seed.
nlohmann::json oracle_report(const TruthTable& truth, const OracleInputs& in);

}  // namespace linkvol::synth
