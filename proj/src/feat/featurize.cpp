#include "linkvol/feat/featurize.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "linkvol/common/hash.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/geo/geometry.hpp"

namespace linkvol::feat {

namespace {

const std::vector<std::string> kCanon = {
    "third_party_count", "population_density", "median_income", "lum_entropy",
    "pct_parkland", "poi_density", "pct_walk_only", "pct_walk_linked",
    "precip_mm", "tmin_c", "tmax_c", "pm25", "pm10", "neph", "no", "no2", "o3",
    "hot_day", "cold_day", "rainy_day", "poor_air", "low_visibility",
    "avg_slope_pct", "max_slope_pct", "low_max_slope",
    "pre_covid", "covid_lockdown", "weekday",
    "footway", "residential", "tertiary", "dedicated_bicycle",
};

// Candidate lists as screened, ranked by reported coefficient.
const std::vector<std::string> kWalkFull = {
    "third_party_count", "population_density", "poi_density", "pct_walk_linked",
    "no", "tmin_c", "avg_slope_pct", "no2", "o3", "pct_parkland", "weekday",
    "pm10", "median_income", "pm25", "lum_entropy", "tertiary", "precip_mm",
    "neph", "residential", "tmax_c", "footway", "max_slope_pct",
};

const std::vector<std::string> kCycleFull = {
    "third_party_count", "population_density", "pm25", "neph", "avg_slope_pct",
    "pm10", "lum_entropy", "covid_lockdown", "tmax_c", "precip_mm", "weekday",
    "max_slope_pct", "dedicated_bicycle", "pre_covid", "median_income",
};

// Variables kept in the final models.
const std::vector<std::string> kWalkFinal = {
    "third_party_count", "poi_density", "population_density", "pct_walk_linked",
    "avg_slope_pct", "weekday", "median_income", "precip_mm", "pct_parkland",
    "lum_entropy", "tmin_c", "tertiary", "tmax_c", "footway", "residential",
    "pm10",
};

const std::vector<std::string> kCycleFinal = {
    "third_party_count", "population_density", "max_slope_pct", "lum_entropy",
    "pm25", "weekday", "pre_covid",
};

const std::vector<std::string> kWeatherVars = {"precip_mm", "tmin_c", "tmax_c", "temp_c"};
const std::vector<std::string> kAirVars = {"pm25", "pm10", "neph", "no", "no2", "o3"};

bool is_weather_var(const std::string& v) {
  return std::find(kWeatherVars.begin(), kWeatherVars.end(), v) != kWeatherVars.end();
}

struct Series {
  std::map<std::int64_t, double> by_date;
  double sum = 0.0;

  double mean() const { return sum / static_cast<double>(by_date.size()); }
  bool empty() const { return by_date.empty(); }
};

enum class FillLevel { exact, carry_forward, station_mean, global_mean };

struct StationIndex {
  // station_id -> var -> series
  std::unordered_map<std::string, std::map<std::string, Series>> per_station;
  std::map<std::string, Series> global;  // var -> pooled series (means only)

  void add(const data::StationObservation& o) {
    for (const auto& [var, v] : o.values) {
      auto& s = per_station[o.station_id][var];
      if (s.by_date.emplace(o.date.serial(), v).second) s.sum += v;
      auto& g = global[var];
      // Pooled series only needs the mean; key by insertion count to keep
      // duplicates across stations.
      g.by_date.emplace(static_cast<std::int64_t>(g.by_date.size()), v);
      g.sum += v;
    }
  }

  const Series* find(const std::string& station_id, const std::string& var) const {
    const auto it = per_station.find(station_id);
    if (it == per_station.end()) return nullptr;
    const auto jt = it->second.find(var);
    if (jt == it->second.end() || jt->second.empty()) return nullptr;
    return &jt->second;
  }

  // Daily max temperature falls back to a generic temperature series when a
  // station reports temp_c but never tmax_c.
  const Series* find_with_alias(const std::string& station_id, const std::string& var) const {
    const Series* s = find(station_id, var);
    if (!s && var == "tmax_c") s = find(station_id, "temp_c");
    return s;
  }

  std::optional<std::pair<double, FillLevel>> resolve(const std::string& station_id,
                                                      const std::string& var,
                                                      std::int64_t serial) const {
    const Series* s = find_with_alias(station_id, var);
    if (s) {
      const auto it = s->by_date.find(serial);
      if (it != s->by_date.end()) return {{it->second, FillLevel::exact}};
      auto ub = s->by_date.lower_bound(serial);
      if (ub != s->by_date.begin()) {
        --ub;
        if (serial - ub->first <= 7) return {{ub->second, FillLevel::carry_forward}};
      }
      return {{s->mean(), FillLevel::station_mean}};
    }
    auto git = global.find(var);
    if (git == global.end() && var == "tmax_c") git = global.find("temp_c");
    if (git != global.end() && !git->second.empty()) {
      return {{git->second.mean(), FillLevel::global_mean}};
    }
    return std::nullopt;
  }
};

struct ZoneDerived {
  double population_density = 0.0;
  double median_income = 0.0;
  double lum_entropy = 0.0;
  double pct_parkland = 0.0;
};

struct RowDraft {
  std::size_t link_idx;
  Date date;
  std::string site_id;  // empty on inference rows
  double target = 0.0;
  double third_party = 0.0;
};

struct Assembler {
  const Sources& src;
  data::Mode mode;
  const std::vector<std::string>& schema;
  BuildReport& report;

  std::unordered_map<std::string, std::size_t> link_index;
  std::unordered_map<std::string, ZoneDerived> zone_derived;
  std::unordered_map<std::string, const data::LgaRecord*> lga_index;
  StationIndex stations;
  bool wants_station_var = false;

  Assembler(const Sources& s, data::Mode m, const std::vector<std::string>& sch,
            BuildReport& rep)
      : src(s), mode(m), schema(sch), report(rep) {
    if (!src.links) throw std::invalid_argument("feature assembly needs links");
    for (std::size_t i = 0; i < src.links->size(); ++i) {
      link_index.emplace((*src.links)[i].link_id, i);
    }
    if (src.zones) {
      for (const auto& z : *src.zones) {
        ZoneDerived d;
        d.population_density = z.population_density();
        d.median_income = z.median_weekly_income_aud;
        double total = 0.0;
        for (const auto& [_, a] : z.land_use_areas) total += a;
        if (total > 0.0) {
          d.lum_entropy = geo::lum_entropy(z.land_use_areas);
          d.pct_parkland = geo::parkland_share(z.land_use_areas) * 100.0;
        }
        zone_derived.emplace(z.zone_id, d);
      }
    }
    if (src.lgas) {
      for (const auto& g : *src.lgas) lga_index.emplace(g.lga_id, &g);
    }
    if (src.station_obs) {
      for (const auto& o : *src.station_obs) stations.add(o);
    }
    check_sources();
  }

  void check_sources() {
    const std::unordered_set<std::string> zone_feats = {"population_density", "median_income",
                                                        "lum_entropy", "pct_parkland"};
    const std::unordered_set<std::string> lga_feats = {"poi_density", "pct_walk_only",
                                                       "pct_walk_linked"};
    std::unordered_set<std::string> seen;
    for (const auto& f : schema) {
      if (!seen.insert(f).second) {
        throw std::runtime_error("duplicate feature in schema: '" + f + "'");
      }
      if (std::find(kCanon.begin(), kCanon.end(), f) == kCanon.end()) {
        throw std::runtime_error("unknown feature '" + f + "'");
      }
      if (zone_feats.count(f) && zone_derived.empty()) {
        throw std::runtime_error("feature '" + f + "' has no upstream source (no zones loaded)");
      }
      if (lga_feats.count(f) && lga_index.empty()) {
        throw std::runtime_error("feature '" + f + "' has no upstream source (no LGAs loaded)");
      }
      const std::string base = station_source_of(f);
      if (!base.empty()) {
        wants_station_var = true;
        auto git = stations.global.find(base);
        if (git == stations.global.end() && base == "tmax_c") {
          git = stations.global.find("temp_c");
        }
        if (git == stations.global.end() || git->second.empty()) {
          throw std::runtime_error("feature '" + f +
                                   "' has no upstream source (no station observations for '" +
                                   base + "')");
        }
      }
      if (f == "third_party_count" && !src.third_party) {
        throw std::runtime_error("feature 'third_party_count' has no upstream source");
      }
    }
  }

  // Station variable a feature reads from; empty for non-station features.
  static std::string station_source_of(const std::string& f) {
    if (is_weather_var(f) || std::find(kAirVars.begin(), kAirVars.end(), f) != kAirVars.end()) {
      return f;
    }
    if (f == "hot_day" || f == "cold_day") return "tmax_c";
    if (f == "rainy_day") return "precip_mm";
    if (f == "poor_air") return "pm25";
    if (f == "low_visibility") return "neph";
    return {};
  }

  double station_value(const data::LinkRecord& link, const std::string& var,
                       const Date& date, std::map<std::string, double>& cache) {
    const auto hit = cache.find(var);
    if (hit != cache.end()) return hit->second;
    const std::string& sid = is_weather_var(var) ? link.weather_station_id : link.air_station_id;
    const auto r = stations.resolve(sid, var, date.serial());
    if (!r) {
      throw std::runtime_error("feature source '" + var + "' unavailable for link '" +
                               link.link_id + "'");
    }
    switch (r->second) {
      case FillLevel::exact:
        break;
      case FillLevel::carry_forward:
        ++report.imputed_carry_forward;
        ++report.imputed_by_variable[var];
        break;
      case FillLevel::station_mean:
        ++report.imputed_station_mean;
        ++report.imputed_by_variable[var];
        break;
      case FillLevel::global_mean:
        ++report.imputed_global_mean;
        ++report.imputed_by_variable[var];
        break;
    }
    cache.emplace(var, r->first);
    return r->first;
  }

  const ZoneDerived& zone_of(const data::LinkRecord& link, const std::string& feature) {
    if (link.zone_id.empty()) {
      throw std::runtime_error("feature '" + feature + "': link '" + link.link_id +
                               "' has no zone assignment");
    }
    const auto it = zone_derived.find(link.zone_id);
    if (it == zone_derived.end()) {
      throw std::runtime_error("feature '" + feature + "': link '" + link.link_id +
                               "' references unknown zone '" + link.zone_id + "'");
    }
    return it->second;
  }

  const data::LgaRecord& lga_of(const data::LinkRecord& link, const std::string& feature) {
    if (link.lga_id.empty()) {
      throw std::runtime_error("feature '" + feature + "': link '" + link.link_id +
                               "' has no LGA assignment");
    }
    const auto it = lga_index.find(link.lga_id);
    if (it == lga_index.end()) {
      throw std::runtime_error("feature '" + feature + "': link '" + link.link_id +
                               "' references unknown LGA '" + link.lga_id + "'");
    }
    return *it->second;
  }

  void fill_row(const RowDraft& d, Eigen::VectorXd& out) {
    const auto& link = (*src.links)[d.link_idx];
    std::map<std::string, double> cache;  // per-row station lookups, counted once
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::string& f = schema[j];
      double v = 0.0;
      if (f == "third_party_count") {
        v = d.third_party;
      } else if (f == "population_density") {
        v = zone_of(link, f).population_density;
      } else if (f == "median_income") {
        v = zone_of(link, f).median_income;
      } else if (f == "lum_entropy") {
        v = zone_of(link, f).lum_entropy;
      } else if (f == "pct_parkland") {
        v = zone_of(link, f).pct_parkland;
      } else if (f == "poi_density") {
        v = lga_of(link, f).poi_density();
      } else if (f == "pct_walk_only") {
        v = lga_of(link, f).pct_walk_only * 100.0;
      } else if (f == "pct_walk_linked") {
        v = lga_of(link, f).pct_walk_linked * 100.0;
      } else if (f == "hot_day") {
        v = station_value(link, "tmax_c", d.date, cache) > 30.0 ? 1.0 : 0.0;
      } else if (f == "cold_day") {
        v = station_value(link, "tmax_c", d.date, cache) < 10.0 ? 1.0 : 0.0;
      } else if (f == "rainy_day") {
        v = station_value(link, "precip_mm", d.date, cache) > 50.0 ? 1.0 : 0.0;
      } else if (f == "poor_air") {
        v = station_value(link, "pm25", d.date, cache) > 10.0 ? 1.0 : 0.0;
      } else if (f == "low_visibility") {
        v = station_value(link, "neph", d.date, cache) < 2.3 ? 1.0 : 0.0;
      } else if (!station_source_of(f).empty()) {
        v = station_value(link, f, d.date, cache);
      } else if (f == "avg_slope_pct") {
        v = link.avg_slope_pct;
      } else if (f == "max_slope_pct") {
        v = link.max_slope_pct;
      } else if (f == "low_max_slope") {
        v = link.max_slope_pct < 7.5 ? 1.0 : 0.0;
      } else if (f == "pre_covid") {
        v = is_pre_covid(d.date) ? 1.0 : 0.0;
      } else if (f == "covid_lockdown") {
        v = is_covid_lockdown(d.date) ? 1.0 : 0.0;
      } else if (f == "weekday") {
        v = d.date.is_weekday() ? 1.0 : 0.0;
      } else if (f == "footway") {
        v = link.footway ? 1.0 : 0.0;
      } else if (f == "residential") {
        v = link.residential ? 1.0 : 0.0;
      } else if (f == "tertiary") {
        v = link.tertiary ? 1.0 : 0.0;
      } else if (f == "dedicated_bicycle") {
        v = link.dedicated_bicycle ? 1.0 : 0.0;
      } else {
        throw std::runtime_error("unknown feature '" + f + "'");
      }
      if (!std::isfinite(v)) {
        throw std::runtime_error("feature '" + f + "' produced a non-finite value on link '" +
                                 link.link_id + "'");
      }
      out(static_cast<Eigen::Index>(j)) = v;
    }
  }

  FeatureMatrix assemble(std::vector<RowDraft> drafts, bool with_target) {
    std::sort(drafts.begin(), drafts.end(), [&](const RowDraft& a, const RowDraft& b) {
      const auto& la = (*src.links)[a.link_idx].link_id;
      const auto& lb = (*src.links)[b.link_idx].link_id;
      if (la != lb) return la < lb;
      if (a.date != b.date) return a.date < b.date;
      return a.site_id < b.site_id;
    });
    FeatureMatrix m;
    m.schema = schema;
    m.schema_hash = schema_digest(schema);
    m.has_target = with_target;
    const auto n = static_cast<Eigen::Index>(drafts.size());
    m.X.resize(n, static_cast<Eigen::Index>(schema.size()));
    if (with_target) m.y.resize(n);
    m.keys.reserve(drafts.size());
    m.row_sites.reserve(drafts.size());
    Eigen::VectorXd row(static_cast<Eigen::Index>(schema.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& d = drafts[static_cast<std::size_t>(i)];
      fill_row(d, row);
      m.X.row(i) = row.transpose();
      if (with_target) m.y(i) = d.target;
      m.keys.push_back({(*src.links)[d.link_idx].link_id, d.date});
      m.row_sites.push_back(d.site_id);
    }
    report.rows_emitted = drafts.size();
    return m;
  }
};

}  // namespace

std::size_t FeatureMatrix::col(const std::string& feature) const {
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j] == feature) return j;
  }
  throw std::out_of_range("feature '" + feature + "' not in schema");
}

std::uint64_t schema_digest(const std::vector<std::string>& schema) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& name : schema) {
    h = fnv1a64(name, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::string>& features) {
  FeatureMatrix out;
  out.schema = features;
  out.schema_hash = schema_digest(features);
  out.keys = m.keys;
  out.row_sites = m.row_sites;
  out.has_target = m.has_target;
  out.y = m.y;
  out.X.resize(m.X.rows(), static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    out.X.col(static_cast<Eigen::Index>(j)) = m.X.col(static_cast<Eigen::Index>(m.col(features[j])));
  }
  return out;
}

void write_matrix_csv(const std::string& path, const FeatureMatrix& m) {
  std::vector<std::string> header = {"link_id", "date", "site_id", "target"};
  header.insert(header.end(), m.schema.begin(), m.schema.end());
  CsvWriter w(header);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    w.field(m.keys[i].link_id);
    w.field(m.keys[i].date.to_string());
    w.field(m.row_sites[i]);
    if (m.has_target)
      w.field(m.y(static_cast<Eigen::Index>(i)));
    else
      w.field(std::string{});
    for (std::size_t j = 0; j < m.cols(); ++j) {
      w.field(m.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    w.end_row();
  }
  w.save(path);
}

FeatureMatrix read_matrix_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 4 || t.header[0] != "link_id" || t.header[1] != "date" ||
      t.header[2] != "site_id" || t.header[3] != "target") {
    throw std::runtime_error(path + ": not a feature-matrix dump");
  }
  FeatureMatrix m;
  m.schema.assign(t.header.begin() + 4, t.header.end());
  m.schema_hash = schema_digest(m.schema);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  m.X.resize(n, static_cast<Eigen::Index>(m.schema.size()));
  m.has_target = !t.rows.empty() && !t.rows[0][3].empty();
  if (m.has_target) m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    m.keys.push_back({row[0], Date::parse(row[1])});
    m.row_sites.push_back(row[2]);
    if (m.has_target) {
      if (row[3].empty()) throw std::runtime_error(path + ": target column has gaps");
      m.y(i) = std::stod(row[3]);
    } else if (!row[3].empty()) {
      throw std::runtime_error(path + ": target column has gaps");
    }
    for (std::size_t j = 0; j < m.schema.size(); ++j) {
      m.X(i, static_cast<Eigen::Index>(j)) = std::stod(row[4 + j]);
    }
  }
  return m;
}

const std::vector<std::string>& feature_canon() { return kCanon; }

const std::vector<std::string>& named_feature_set(const std::string& name) {
  if (name == "walk_full") return kWalkFull;
  if (name == "cycle_full") return kCycleFull;
  if (name == "walk_final") return kWalkFinal;
  if (name == "cycle_final") return kCycleFinal;
  throw std::invalid_argument("unknown feature set '" + name +
                              "' (expected walk_full, cycle_full, walk_final or cycle_final)");
}

std::string BuildReport::to_json() const {
  nlohmann::ordered_json j;
  j["rows_emitted"] = rows_emitted;
  j["count_rows_seen"] = count_rows_seen;
  j["censored_rows"] = censored_rows;
  j["imputed_carry_forward"] = imputed_carry_forward;
  j["imputed_station_mean"] = imputed_station_mean;
  j["imputed_global_mean"] = imputed_global_mean;
  j["imputed_by_variable"] = imputed_by_variable;
  return j.dump(2) + "\n";
}

bool is_pre_covid(const Date& d) { return d < Date(2020, 2, 1); }

bool is_covid_lockdown(const Date& d) {
  return (d >= Date(2020, 3, 16) && d <= Date(2020, 5, 15)) ||
         (d >= Date(2021, 6, 23) && d <= Date(2021, 9, 15));
}

FeatureMatrix build_training_matrix(const Sources& src, data::Mode mode,
                                    const std::vector<std::string>& schema,
                                    BuildReport* report) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  if (!src.counts) throw std::invalid_argument("training matrix needs count observations");
  if (!src.third_party) throw std::invalid_argument("training matrix needs third-party counts");
  Assembler a(src, mode, schema, rep);

  std::map<std::pair<std::string, std::int64_t>, double> tp_index;
  for (const auto& tp : *src.third_party) {
    if (tp.mode == mode) tp_index[{tp.link_id, tp.date.serial()}] = tp.count;
  }
  std::vector<RowDraft> drafts;
  for (const auto& c : *src.counts) {
    if (c.mode != mode) continue;
    ++rep.count_rows_seen;
    const auto li = a.link_index.find(c.link_id);
    if (li == a.link_index.end()) {
      throw std::runtime_error("count observation references unknown link '" + c.link_id + "'");
    }
    double tp = 0.0;
    if (c.third_party_count) {
      tp = *c.third_party_count;
    } else {
      const auto it = tp_index.find({c.link_id, c.date.serial()});
      if (it == tp_index.end()) {
        ++rep.censored_rows;  // no third-party coverage: excluded from training
        continue;
      }
      tp = it->second;
    }
    drafts.push_back({li->second, c.date, c.site_id, c.observed_count, tp});
  }
  return a.assemble(std::move(drafts), /*with_target=*/true);
}

FeatureMatrix build_inference_matrix(const Sources& src, data::Mode mode,
                                     const std::vector<std::string>& schema,
                                     BuildReport* report) {
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  if (!src.third_party) throw std::invalid_argument("inference matrix needs third-party counts");
  Assembler a(src, mode, schema, rep);
  std::vector<RowDraft> drafts;
  for (const auto& tp : *src.third_party) {
    if (tp.mode != mode) continue;
    const auto li = a.link_index.find(tp.link_id);
    if (li == a.link_index.end()) {
      throw std::runtime_error("third-party row references unknown link '" + tp.link_id + "'");
    }
    drafts.push_back({li->second, tp.date, std::string{}, 0.0, tp.count});
  }
  return a.assemble(std::move(drafts), /*with_target=*/false);
}

}  // namespace linkvol::feat
