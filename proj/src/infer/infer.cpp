#include "linkvol/infer/infer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "linkvol/common/io.hpp"
#include "linkvol/common/parallel.hpp"

namespace linkvol::infer {

namespace {

double parse_cell(const std::string& s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("results csv: bad ") + what + " value '" + s + "'");
  }
  return v;
}

double trips_from_km(double km, const AggregationParams& p) { return km / (p.d / p.gamma); }

}  // namespace

std::vector<InferenceResult> predict_network(const model::TrainedModel& m,
                                             const feat::FeatureMatrix& matrix,
                                             PredictReport* report, int threads) {
  if (matrix.schema_hash != m.schema_hash) {
    throw std::invalid_argument("predict: feature schema mismatch between model and matrix");
  }
  const auto n = matrix.rows();
  std::vector<InferenceResult> out(n);
  if (n == 0) {
    if (report) *report = {};
    return out;
  }

  std::optional<std::size_t> base_col;
  for (std::size_t j = 0; j < matrix.schema.size(); ++j) {
    if (matrix.schema[j] == "third_party_count") base_col = j;
  }

  constexpr std::size_t kChunk = 8192;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::size_t> floored(n_chunks, 0);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    const std::size_t lo = c * kChunk;
    const std::size_t len = std::min(kChunk, n - lo);
    const Eigen::VectorXd pred = m.predict_raw(
        matrix.X.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(len)));
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t r = lo + i;
      auto& res = out[r];
      res.link_id = matrix.keys[r].link_id;
      res.date = matrix.keys[r].date;
      double est = pred(static_cast<Eigen::Index>(i));
      if (est < 0.0) {
        est = 0.0;
        ++floored[c];
      }
      res.estimate = est;
      res.mitigated_estimate = est;
      if (base_col) {
        const double base = matrix.X(static_cast<Eigen::Index>(r),
                                     static_cast<Eigen::Index>(*base_col));
        res.base_count = base;
        if (base > 0.0) res.ratio = est / base;
      }
    }
  });

  if (report) {
    report->rows = n;
    report->floored_negative = std::accumulate(floored.begin(), floored.end(), std::size_t{0});
  }
  return out;
}

KneedleResult kneedle_elbow(std::vector<double> values) {
  std::sort(values.begin(), values.end(), std::greater<double>());
  const std::size_t n = values.size();
  std::size_t distinct = n == 0 ? 0 : 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (values[i] != values[i - 1]) ++distinct;
  }
  if (distinct < 3) throw std::invalid_argument("kneedle: need >= 3 distinct values");

  const double top = values.front();
  const double bottom = values.back();
  const double span = top - bottom;
  // Gap between the descending chord (1 - x) and the normalized curve.
  double best = -1.0;
  std::size_t best_rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    const double y = (values[i] - bottom) / span;
    const double gap = (1.0 - x) - y;
    if (gap > best) {
      best = gap;
      best_rank = i;
    }
  }
  KneedleResult res;
  if (best < 1e-9) return res;  // straight line: no knee
  res.has_knee = true;
  res.rank = best_rank;
  res.elbow = values[best_rank];
  return res;
}

MitigationStrategy parse_strategy(const std::string& s) {
  if (s == "cap") return MitigationStrategy::cap;
  if (s == "fallback") return MitigationStrategy::fallback;
  throw std::invalid_argument("unknown mitigation strategy '" + s + "' (cap | fallback)");
}

std::string to_string(MitigationStrategy s) {
  return s == MitigationStrategy::cap ? "cap" : "fallback";
}

MitigationReport mitigate(std::vector<InferenceResult>& results, double elbow,
                          MitigationStrategy strategy, std::optional<double> base_beta) {
  if (!(elbow > 0.0)) throw std::invalid_argument("mitigate: elbow must be > 0");
  if (strategy == MitigationStrategy::fallback && !base_beta) {
    throw std::invalid_argument("mitigate: fallback strategy needs the base model slope");
  }
  MitigationReport rep;
  for (auto& r : results) {
    r.outlier = false;
    r.mitigated_estimate = r.estimate;
    if (r.ratio && *r.ratio > elbow) {
      r.outlier = true;
      const double base = *r.base_count;
      r.mitigated_estimate =
          (strategy == MitigationStrategy::cap ? elbow : *base_beta) * base;
      ++rep.flagged;
    } else {
      ++rep.unchanged;
    }
  }
  return rep;
}

void AggregationParams::check() const {
  if (!(d > 0.0)) throw std::invalid_argument("aggregation: trip distance d must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("aggregation: gamma must lie in (0, 1]");
  }
}

AggregationParams default_aggregation_params(data::Mode mode) {
  return mode == data::Mode::walk ? AggregationParams{1.0, 0.5} : AggregationParams{4.7, 1.0};
}

namespace {

// Fixed accumulation order: indices sorted by (link_id, date).
std::vector<std::size_t> sorted_order(const std::vector<InferenceResult>& results) {
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (results[a].link_id != results[b].link_id) return results[a].link_id < results[b].link_id;
    return results[a].date < results[b].date;
  });
  return order;
}

double length_km_or_throw(const std::map<std::string, double>& lengths,
                          const std::string& link_id) {
  const auto it = lengths.find(link_id);
  if (it == lengths.end()) {
    throw std::invalid_argument("aggregate: no length for link '" + link_id + "'");
  }
  return it->second;
}

}  // namespace

TripTotals aggregate_trips(const std::vector<InferenceResult>& results,
                           const std::map<std::string, double>& length_km_by_link,
                           const AggregationParams& params) {
  params.check();
  TripTotals t;
  for (const auto i : sorted_order(results)) {
    t.km += results[i].mitigated_estimate * length_km_or_throw(length_km_by_link,
                                                               results[i].link_id);
  }
  t.trips = trips_from_km(t.km, params);
  return t;
}

std::map<std::string, TripTotals> rollup_by_lga(const std::vector<InferenceResult>& results,
                                                const std::vector<data::LinkRecord>& links,
                                                const AggregationParams& params) {
  params.check();
  std::map<std::string, std::pair<std::string, double>> by_link;  // id -> (lga, km)
  for (const auto& l : links) {
    by_link[l.link_id] = {l.lga_id.empty() ? "UNASSIGNED" : l.lga_id, l.length_m / 1000.0};
  }
  std::map<std::string, TripTotals> out;
  for (const auto i : sorted_order(results)) {
    const auto it = by_link.find(results[i].link_id);
    if (it == by_link.end()) {
      throw std::invalid_argument("rollup: unknown link '" + results[i].link_id + "'");
    }
    out[it->second.first].km += results[i].mitigated_estimate * it->second.second;
  }
  for (auto& [lga, totals] : out) totals.trips = trips_from_km(totals.km, params);
  return out;
}

DayClassTotals weekday_weekend_totals(const std::vector<InferenceResult>& results,
                                      const std::map<std::string, double>& length_km_by_link,
                                      const AggregationParams& params) {
  params.check();
  double weekday_km = 0.0, weekend_km = 0.0;
  std::set<std::int64_t> weekday_dates, weekend_dates;
  for (const auto i : sorted_order(results)) {
    const auto& r = results[i];
    const double km =
        r.mitigated_estimate * length_km_or_throw(length_km_by_link, r.link_id);
    if (r.date.is_weekday()) {
      weekday_km += km;
      weekday_dates.insert(r.date.serial());
    } else {
      weekend_km += km;
      weekend_dates.insert(r.date.serial());
    }
  }
  DayClassTotals out;
  out.weekday_dates = weekday_dates.size();
  out.weekend_dates = weekend_dates.size();
  if (!weekday_dates.empty()) {
    out.weekday_trips_per_day =
        trips_from_km(weekday_km, params) / static_cast<double>(weekday_dates.size());
  }
  if (!weekend_dates.empty()) {
    out.weekend_trips_per_day =
        trips_from_km(weekend_km, params) / static_cast<double>(weekend_dates.size());
  }
  return out;
}

std::map<std::string, double> link_lengths_km(const std::vector<data::LinkRecord>& links) {
  std::map<std::string, double> out;
  for (const auto& l : links) out[l.link_id] = l.length_m / 1000.0;
  return out;
}

void write_results_csv(const std::string& path, const std::vector<InferenceResult>& results) {
  CsvWriter w({"link_id", "date", "estimate", "base_count", "ratio", "outlier",
               "mitigated_estimate"});
  for (const auto& r : results) {
    w.field(r.link_id);
    w.field(r.date.to_string());
    w.field(r.estimate);
    w.field(r.base_count ? fmt_double(*r.base_count) : "");
    w.field(r.ratio ? fmt_double(*r.ratio) : "");
    w.field(static_cast<std::int64_t>(r.outlier ? 1 : 0));
    w.field(r.mitigated_estimate);
    w.end_row();
  }
  w.save(path);
}

std::vector<InferenceResult> read_results_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto c_link = t.col("link_id");
  const auto c_date = t.col("date");
  const auto c_est = t.col("estimate");
  const auto c_base = t.col("base_count");
  const auto c_ratio = t.col("ratio");
  const auto c_out = t.col("outlier");
  const auto c_mit = t.col("mitigated_estimate");
  std::vector<InferenceResult> out;
  for (const auto& row : t.rows) {
    InferenceResult r;
    r.link_id = row[c_link];
    r.date = Date::parse(row[c_date]);
    r.estimate = parse_cell(row[c_est], "estimate");
    if (!row[c_base].empty()) r.base_count = parse_cell(row[c_base], "base_count");
    if (!row[c_ratio].empty()) r.ratio = parse_cell(row[c_ratio], "ratio");
    r.outlier = row[c_out] == "1";
    r.mitigated_estimate = parse_cell(row[c_mit], "mitigated_estimate");
    out.push_back(std::move(r));
  }
  return out;
}

void write_results_geojson(const std::string& path, const std::vector<InferenceResult>& results,
                           const std::vector<data::LinkRecord>& links) {
  std::map<std::string, const data::LinkRecord*> by_id;
  for (const auto& l : links) by_id[l.link_id] = &l;

  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  auto& features = fc["features"] = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    const auto it = by_id.find(r.link_id);
    if (it == by_id.end()) {
      throw std::invalid_argument("geojson: unknown link '" + r.link_id + "'");
    }
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    auto& geom = f["geometry"];
    geom["type"] = "LineString";
    auto& coords = geom["coordinates"] = nlohmann::ordered_json::array();
    for (const auto& pt : it->second->geometry) coords.push_back({pt[0], pt[1]});
    auto& props = f["properties"];
    props["link_id"] = r.link_id;
    props["date"] = r.date.to_string();
    props["estimate"] = r.estimate;
    if (r.base_count) props["base_count"] = *r.base_count;
    if (r.ratio) props["ratio"] = *r.ratio;
    props["outlier"] = r.outlier ? 1 : 0;
    props["mitigated_estimate"] = r.mitigated_estimate;
    features.push_back(std::move(f));
  }
  write_file_bytes(path, fc.dump(1) + "\n");
}

}  // namespace linkvol::infer
