#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "linkvol/data/records.hpp"
#include "linkvol/feat/featurize.hpp"
#include "linkvol/model/train.hpp"

namespace linkvol::infer {

// One (link, date) estimate. `ratio` is only defined against a positive
// base count; `mitigated_estimate` equals `estimate` until mitigation runs.
struct InferenceResult {
  std::string link_id;
  Date date;
  double estimate = 0.0;
  std::optional<double> base_count;
  std::optional<double> ratio;
  bool outlier = false;
  double mitigated_estimate = 0.0;
};

struct PredictReport {
  std::size_t rows = 0;
  std::size_t floored_negative = 0;  // raw predictions below zero, clamped
};

/// Scores every (link, date) row of an inference matrix. Negative raw
/// predictions are floored at zero and counted. Chunks run in parallel;
/// results land in indexed slots so output is thread-count invariant.
std::vector<InferenceResult> predict_network(const model::TrainedModel& m,
                                             const feat::FeatureMatrix& matrix,
                                             PredictReport* report = nullptr, int threads = 1);

struct KneedleResult {
  bool has_knee = false;
  double elbow = 0.0;     // the value at the knee rank
  std::size_t rank = 0;   // index into the descending-sorted curve
};

/// Elbow of a descending value distribution: sort, normalize both axes to
/// [0,1], and take the rank maximizing the gap between the chord and the
/// curve. A near-straight curve (max gap < 1e-9) has no knee.
KneedleResult kneedle_elbow(std::vector<double> values);

enum class MitigationStrategy { cap, fallback };

MitigationStrategy parse_strategy(const std::string& s);
std::string to_string(MitigationStrategy s);

struct MitigationReport {
  std::size_t flagged = 0;
  std::size_t unchanged = 0;
};

/// Flags rows whose ratio strictly exceeds the elbow and replaces their
/// estimate: cap uses elbow x base_count, fallback uses base_beta x
/// base_count. Rows at or below the elbow are untouched.
MitigationReport mitigate(std::vector<InferenceResult>& results, double elbow,
                          MitigationStrategy strategy,
                          std::optional<double> base_beta = std::nullopt);

// Trip-length conversion constants: d is the average trip distance in km,
// gamma the effective distance factor, so one trip covers d/gamma km.
struct AggregationParams {
  double d = 1.0;
  double gamma = 0.5;

  void check() const;
};

AggregationParams default_aggregation_params(data::Mode mode);

struct TripTotals {
  double km = 0.0;
  double trips = 0.0;
};

/// total_km = sum of mitigated_estimate x length_km; total_trips =
/// total_km / (d/gamma). Accumulated in sorted (link, date) order so totals
/// are bit-stable. Throws naming any link without a length.
TripTotals aggregate_trips(const std::vector<InferenceResult>& results,
                           const std::map<std::string, double>& length_km_by_link,
                           const AggregationParams& params);

/// Per-LGA partition of the network totals; links without an LGA fall under
/// "UNASSIGNED". Throws naming any result link missing from `links`.
std::map<std::string, TripTotals> rollup_by_lga(const std::vector<InferenceResult>& results,
                                                const std::vector<data::LinkRecord>& links,
                                                const AggregationParams& params);

struct DayClassTotals {
  std::optional<double> weekday_trips_per_day;
  std::optional<double> weekend_trips_per_day;
  std::size_t weekday_dates = 0;
  std::size_t weekend_dates = 0;
};

/// Average trips per day within each day class; a class with no dates in the
/// results is absent.
DayClassTotals weekday_weekend_totals(const std::vector<InferenceResult>& results,
                                      const std::map<std::string, double>& length_km_by_link,
                                      const AggregationParams& params);

std::map<std::string, double> link_lengths_km(const std::vector<data::LinkRecord>& links);

void write_results_csv(const std::string& path, const std::vector<InferenceResult>& results);
std::vector<InferenceResult> read_results_csv(const std::string& path);

/// One feature per (link, date) row, carrying the link geometry plus
/// estimate, ratio, outlier, and mitigated fields.
void write_results_geojson(const std::string& path, const std::vector<InferenceResult>& results,
                           const std::vector<data::LinkRecord>& links);

}  // namespace linkvol::infer
