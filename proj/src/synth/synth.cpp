#include "linkvol/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "linkvol/common/hash.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/common/rng.hpp"
#include "linkvol/data/writers.hpp"
#include "linkvol/feat/featurize.hpp"
#include "linkvol/geo/geometry.hpp"

namespace linkvol::synth {

namespace {

using nlohmann::json;

// Degrees per metre around the generated region's latitude.
constexpr double kLat0 = -33.85;
constexpr double kLon0 = 150.90;

std::string seq_id(const char* prefix, int i, int width) {
  std::string n = std::to_string(i);
  while (static_cast<int>(n.size()) < width) n.insert(n.begin(), '0');
  return prefix + n;
}

std::int64_t end_date_days(const SynthConfig& c) { return c.end_date - c.start_date; }

}  // namespace

void SynthConfig::check() const {
  if (n_links < 1) throw std::invalid_argument("synth: n_links must be >= 1");
  if (n_zones < 1) throw std::invalid_argument("synth: n_zones must be >= 1");
  if (n_stations < 2) throw std::invalid_argument("synth: need >= 2 stations (one per kind)");
  if (n_sites < 1 || n_sites > n_links) {
    throw std::invalid_argument("synth: n_sites must lie in [1, n_links]");
  }
  if (end_date < start_date) throw std::invalid_argument("synth: end_date before start_date");
  if (!(planted_beta > 0.0)) throw std::invalid_argument("synth: planted_beta must be > 0");
  if (noise_sigma < 0.0) throw std::invalid_argument("synth: noise_sigma must be >= 0");
  if (censor_threshold < 0.0) {
    throw std::invalid_argument("synth: censor_threshold must be >= 0");
  }
  if (extreme_fraction < 0.0 || extreme_fraction >= 1.0) {
    throw std::invalid_argument("synth: extreme_fraction must lie in [0, 1)");
  }
  if (site_selection != "volume_biased" && site_selection != "uniform") {
    throw std::invalid_argument("synth: site_selection must be volume_biased or uniform");
  }
  if (missing_obs_rate < 0.0 || missing_obs_rate >= 1.0) {
    throw std::invalid_argument("synth: missing_obs_rate must lie in [0, 1)");
  }
}

json SynthConfig::to_json() const {
  json j;
  j["n_links"] = n_links;
  j["n_zones"] = n_zones;
  j["n_stations"] = n_stations;
  j["n_sites"] = n_sites;
  j["start_date"] = start_date.to_string();
  j["end_date"] = end_date.to_string();
  j["mode"] = data::to_string(mode);
  j["planted_beta"] = planted_beta;
  j["noise_sigma"] = noise_sigma;
  j["censor_threshold"] = censor_threshold;
  j["feature_effect_weights"] = feature_effect_weights;
  j["base_log_volume"] = base_log_volume;
  j["extreme_fraction"] = extreme_fraction;
  j["extreme_log_factor"] = extreme_log_factor;
  j["extreme_log_sigma"] = extreme_log_sigma;
  j["site_selection"] = site_selection;
  j["missing_obs_rate"] = missing_obs_rate;
  j["seed"] = seed;
  return j;
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  if (j.contains("n_links")) c.n_links = j.at("n_links").get<int>();
  if (j.contains("n_zones")) c.n_zones = j.at("n_zones").get<int>();
  if (j.contains("n_stations")) c.n_stations = j.at("n_stations").get<int>();
  if (j.contains("n_sites")) c.n_sites = j.at("n_sites").get<int>();
  if (j.contains("start_date")) c.start_date = Date::parse(j.at("start_date").get<std::string>());
  if (j.contains("end_date")) c.end_date = Date::parse(j.at("end_date").get<std::string>());
  if (j.contains("mode")) c.mode = data::parse_mode(j.at("mode").get<std::string>());
  if (j.contains("planted_beta")) c.planted_beta = j.at("planted_beta").get<double>();
  if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("censor_threshold")) {
    c.censor_threshold = j.at("censor_threshold").get<double>();
  }
  if (j.contains("feature_effect_weights")) {
    c.feature_effect_weights =
        j.at("feature_effect_weights").get<std::map<std::string, double>>();
  }
  if (j.contains("base_log_volume")) c.base_log_volume = j.at("base_log_volume").get<double>();
  if (j.contains("extreme_fraction")) c.extreme_fraction = j.at("extreme_fraction").get<double>();
  if (j.contains("extreme_log_factor")) {
    c.extreme_log_factor = j.at("extreme_log_factor").get<double>();
  }
  if (j.contains("extreme_log_sigma")) {
    c.extreme_log_sigma = j.at("extreme_log_sigma").get<double>();
  }
  if (j.contains("site_selection")) c.site_selection = j.at("site_selection").get<std::string>();
  if (j.contains("missing_obs_rate")) {
    c.missing_obs_rate = j.at("missing_obs_rate").get<double>();
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

const std::map<std::string, double>& default_effect_weights() {
  static const std::map<std::string, double> weights = {
      {"population_density", 0.50}, {"poi_density", 0.40},  {"lum_entropy", 0.20},
      {"median_income", 0.10},      {"avg_slope_pct", -0.30}, {"precip_mm", -0.20},
      {"tmax_c", 0.10},             {"weekday", 0.15},
  };
  return weights;
}

WorldBundle generate_world(const SynthConfig& config) {
  config.check();
  WorldBundle w;
  w.config = config;

  const double lat_m = 1.0 / 111320.0;  // degrees latitude per metre
  const double lon_m = lat_m / std::cos(kLat0 * M_PI / 180.0);

  // --- geography ------------------------------------------------------------
  Rng geo_rng(derive_seed(config.seed, 1));
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.n_zones))));
  const double cell_deg = 0.02;
  const std::vector<std::string> lu_classes = {"commercial", "industrial", "parkland",
                                               "residential"};
  const int n_lgas = std::max(1, config.n_zones / 4);
  std::vector<double> lga_area(static_cast<std::size_t>(n_lgas), 0.0);
  for (int z = 0; z < config.n_zones; ++z) {
    data::ZoneRecord zr;
    zr.zone_id = seq_id("z", z + 1, 3);
    zr.area_sqkm = geo_rng.uniform(2.0, 6.0);
    zr.population = geo_rng.uniform(3000.0, 45000.0);
    zr.median_weekly_income_aud = geo_rng.uniform(900.0, 2500.0);
    for (const auto& cls : lu_classes) {
      zr.land_use_areas[cls] = zr.area_sqkm * std::exp(geo_rng.normal(0.0, 1.0));
    }
    // renormalize shares to the zone area
    double total = 0.0;
    for (const auto& [cls, a] : zr.land_use_areas) total += a;
    for (auto& [cls, a] : zr.land_use_areas) a = a / total * zr.area_sqkm;
    w.zones.push_back(std::move(zr));
    lga_area[static_cast<std::size_t>(z * n_lgas / config.n_zones)] += w.zones.back().area_sqkm;
  }
  for (int g = 0; g < n_lgas; ++g) {
    data::LgaRecord lr;
    lr.lga_id = seq_id("lga", g + 1, 2);
    lr.area_sqkm = lga_area[static_cast<std::size_t>(g)];
    lr.poi_count = geo_rng.uniform(50.0, 1200.0);
    lr.pct_walk_only = geo_rng.uniform(0.15, 0.50);
    lr.pct_walk_linked = geo_rng.uniform(0.10, 0.35);
    w.lgas.push_back(std::move(lr));
  }

  const int n_weather = (config.n_stations + 1) / 2;
  const int n_air = config.n_stations - n_weather;
  for (int s = 0; s < n_weather; ++s) {
    data::StationSite st;
    st.station_id = seq_id("ws", s + 1, 2);
    st.kind = data::StationKind::weather;
    st.lon = kLon0 + geo_rng.uniform(0.0, grid * cell_deg);
    st.lat = kLat0 + geo_rng.uniform(0.0, grid * cell_deg);
    w.stations.push_back(st);
  }
  for (int s = 0; s < n_air; ++s) {
    data::StationSite st;
    st.station_id = seq_id("as", s + 1, 2);
    st.kind = data::StationKind::air;
    st.lon = kLon0 + geo_rng.uniform(0.0, grid * cell_deg);
    st.lat = kLat0 + geo_rng.uniform(0.0, grid * cell_deg);
    w.stations.push_back(st);
  }

  for (int i = 0; i < config.n_links; ++i) {
    data::LinkRecord l;
    l.link_id = seq_id("e", i + 1, 5);
    l.mode = config.mode;
    const int z = i % config.n_zones;
    const double cx = kLon0 + (z % grid + 0.5) * cell_deg +
                      geo_rng.uniform(-0.4, 0.4) * cell_deg;
    const double cy = kLat0 + (z / grid + 0.5) * cell_deg +
                      geo_rng.uniform(-0.4, 0.4) * cell_deg;
    const double bearing = geo_rng.uniform(0.0, 2.0 * M_PI);
    const double len = std::exp(geo_rng.uniform(std::log(80.0), std::log(800.0)));
    const double dx = std::cos(bearing) * len / 2.0;
    const double dy = std::sin(bearing) * len / 2.0;
    l.geometry = {{cx - dx * lon_m, cy - dy * lat_m},
                  {cx, cy},
                  {cx + dx * lon_m, cy + dy * lat_m}};
    l.length_m = geo::polyline_length_m(l.geometry);
    l.avg_slope_pct = std::min(12.0, std::abs(geo_rng.normal(2.5, 1.8)));
    l.max_slope_pct = std::min(25.0, l.avg_slope_pct + std::abs(geo_rng.normal(2.0, 1.5)));
    l.footway = geo_rng.uniform01() < 0.35;
    l.residential = geo_rng.uniform01() < 0.40;
    l.tertiary = geo_rng.uniform01() < 0.25;
    l.dedicated_bicycle = config.mode == data::Mode::cycle && geo_rng.uniform01() < 0.30;
    l.zone_id = w.zones[static_cast<std::size_t>(z)].zone_id;
    l.lga_id = w.lgas[static_cast<std::size_t>(z * n_lgas / config.n_zones)].lga_id;
    w.links.push_back(std::move(l));
  }
  const auto weather_of =
      geo::assign_nearest_station(w.links, w.stations, data::StationKind::weather);
  const auto air_of = geo::assign_nearest_station(w.links, w.stations, data::StationKind::air);
  for (std::size_t i = 0; i < w.links.size(); ++i) {
    w.links[i].weather_station_id = weather_of[i];
    w.links[i].air_station_id = air_of[i];
  }

  // --- station observations ---------------------------------------------------
  Rng wx_rng(derive_seed(config.seed, 2));
  const auto n_days = end_date_days(config);
  for (const auto& st : w.stations) {
    const double phase = wx_rng.uniform(0.0, 2.0 * M_PI);
    for (std::int64_t d = 0; d <= n_days; ++d) {
      const Date date = config.start_date + d;
      data::StationObservation obs;
      obs.station_id = st.station_id;
      obs.kind = st.kind;
      obs.date = date;
      if (st.kind == data::StationKind::weather) {
        const double season =
            std::sin(2.0 * M_PI * static_cast<double>(date.serial() % 365) / 365.0 + phase);
        const double temp = 21.0 + 7.0 * season + wx_rng.normal(0.0, 2.0);
        obs.values["temp_c"] = temp;
        obs.values["tmin_c"] = temp - wx_rng.uniform(3.0, 7.0);
        obs.values["tmax_c"] = temp + wx_rng.uniform(3.0, 9.0);
        obs.values["precip_mm"] =
            wx_rng.uniform01() < 0.7 ? 0.0 : wx_rng.exponential(14.0);
      } else {
        const double pm25 = std::abs(wx_rng.normal(8.0, 4.0));
        obs.values["pm25"] = pm25;
        obs.values["pm10"] = pm25 + std::abs(wx_rng.normal(6.0, 3.0));
        obs.values["neph"] = std::abs(wx_rng.normal(2.5, 1.2));
        obs.values["no"] = std::abs(wx_rng.normal(5.0, 3.0));
        obs.values["no2"] = std::abs(wx_rng.normal(10.0, 4.0));
        obs.values["o3"] = std::abs(wx_rng.normal(15.0, 5.0));
      }
      // The first weather station never reports tmax_c, exercising the
      // temp_c fallback path downstream.
      if (st.station_id == "ws01") obs.values.erase("tmax_c");
      for (auto it = obs.values.begin(); it != obs.values.end();) {
        if (wx_rng.uniform01() < config.missing_obs_rate) {
          it = obs.values.erase(it);
        } else {
          ++it;
        }
      }
      if (!obs.values.empty()) w.station_obs.push_back(std::move(obs));
    }
  }

  // --- true volumes off the assembled features -------------------------------
  std::vector<data::ThirdPartyCount> coverage;
  for (const auto& l : w.links) {
    for (std::int64_t d = 0; d <= n_days; ++d) {
      coverage.push_back({l.link_id, config.start_date + d, config.mode, 0.0});
    }
  }
  feat::Sources src;
  src.links = &w.links;
  src.zones = &w.zones;
  src.lgas = &w.lgas;
  src.station_obs = &w.station_obs;
  src.third_party = &coverage;
  const feat::FeatureMatrix feats =
      feat::build_inference_matrix(src, config.mode, feat::feature_canon());

  const auto& weights =
      config.feature_effect_weights.empty() ? default_effect_weights()
                                            : config.feature_effect_weights;
  Eigen::VectorXd logv = Eigen::VectorXd::Constant(feats.X.rows(), config.base_log_volume);
  for (const auto& [name, weight] : weights) {
    if (name == "third_party_count") {
      throw std::invalid_argument("synth: third_party_count cannot carry a planted effect");
    }
    const auto c = static_cast<Eigen::Index>(feats.col(name));  // throws on unknown names
    if (weight == 0.0) continue;
    const Eigen::VectorXd col = feats.X.col(c);
    const double mean = col.mean();
    const double sd =
        std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size()));
    if (sd == 0.0) continue;  // constant feature carries no signal
    logv += weight / sd * (col.array() - mean).matrix();
  }
  for (Eigen::Index r = 0; r < feats.X.rows(); ++r) {
    const double v = std::max(1.0, std::round(std::exp(logv(r))));
    w.true_volume[{feats.keys[static_cast<std::size_t>(r)].link_id,
                   feats.keys[static_cast<std::size_t>(r)].date.serial()}] = v;
  }

  // --- count sites (biased toward busy links by default) ----------------------
  std::vector<double> mean_v(w.links.size(), 0.0);
  for (std::size_t i = 0; i < w.links.size(); ++i) {
    double sum = 0.0;
    for (std::int64_t d = 0; d <= n_days; ++d) {
      sum += w.true_volume.at({w.links[i].link_id, (config.start_date + d).serial()});
    }
    mean_v[i] = sum / static_cast<double>(n_days + 1);
  }
  Rng site_rng(derive_seed(config.seed, 4));
  std::vector<std::size_t> pool(w.links.size());
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> site_links;
  for (int s = 0; s < config.n_sites; ++s) {
    double total = 0.0;
    for (const auto i : pool) {
      total += config.site_selection == "volume_biased" ? mean_v[i] : 1.0;
    }
    double target = site_rng.uniform01() * total;
    std::size_t chosen = pool.size() - 1;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      target -= config.site_selection == "volume_biased" ? mean_v[pool[p]] : 1.0;
      if (target <= 0.0) {
        chosen = p;
        break;
      }
    }
    site_links.push_back(pool[chosen]);
    pool.erase(pool.begin() + static_cast<long>(chosen));
  }
  std::sort(site_links.begin(), site_links.end());

  // --- planted extremes among the unmonitored links ---------------------------
  Rng ext_rng(derive_seed(config.seed, 5));
  std::map<std::string, double> suppression;
  {
    const std::set<std::size_t> site_set(site_links.begin(), site_links.end());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < w.links.size(); ++i) {
      if (!site_set.count(i)) candidates.push_back(i);
    }
    auto n_extreme = static_cast<std::size_t>(
        std::llround(config.extreme_fraction * static_cast<double>(config.n_links)));
    n_extreme = std::min(n_extreme, candidates.size());
    ext_rng.shuffle(candidates);
    candidates.resize(n_extreme);
    std::sort(candidates.begin(), candidates.end());
    for (const auto i : candidates) {
      w.extreme_links.insert(w.links[i].link_id);
      suppression[w.links[i].link_id] =
          std::exp(ext_rng.normal(config.extreme_log_factor, config.extreme_log_sigma));
    }
  }

  // --- third-party coverage ----------------------------------------------------
  Rng tp_rng(derive_seed(config.seed, 6));
  for (const auto& l : w.links) {
    for (std::int64_t d = 0; d <= n_days; ++d) {
      const Date date = config.start_date + d;
      const double v = w.true_volume.at({l.link_id, date.serial()});
      double t = v / config.planted_beta;
      const auto sup = suppression.find(l.link_id);
      if (sup != suppression.end()) t /= sup->second;
      if (config.noise_sigma > 0.0) {
        // mean-one multiplicative noise, then counts are integers
        t *= std::exp(tp_rng.normal(-0.5 * config.noise_sigma * config.noise_sigma,
                                    config.noise_sigma));
        t = std::round(t);
      }
      if (t < config.censor_threshold) continue;
      w.third_party.push_back({l.link_id, date, config.mode, t});
    }
  }

  // --- official counts at the selected sites ----------------------------------
  Rng count_rng(derive_seed(config.seed, 7));
  int site_no = 0;
  for (const auto li : site_links) {
    ++site_no;
    const auto& l = w.links[li];
    for (std::int64_t d = 0; d <= n_days; ++d) {
      const Date date = config.start_date + d;
      const double v = w.true_volume.at({l.link_id, date.serial()});
      double obs = v;
      if (config.noise_sigma > 0.0) {
        obs = std::max(0.0, std::round(v * (1.0 + count_rng.normal(0.0, config.noise_sigma / 3.0))));
      }
      data::CountObservation c;
      c.site_id = seq_id("s", site_no, 3);
      c.link_id = l.link_id;
      c.date = date;
      c.mode = config.mode;
      c.observed_count = obs;
      w.counts.push_back(std::move(c));
    }
  }

  return w;
}

void write_bundle(const WorldBundle& w, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(dir + "/truth");

  data::write_links_geojson(dir + "/links.geojson", w.links);
  data::write_zones_csv(dir + "/zones.csv", w.zones);
  data::write_lgas_csv(dir + "/lgas.csv", w.lgas);
  data::write_station_sites_csv(dir + "/station_sites.csv", w.stations);
  data::write_station_obs_csv(dir + "/station_obs.csv", w.station_obs);
  data::write_counts_csv(dir + "/counts.csv", w.counts);
  data::write_third_party_csv(dir + "/third_party.csv", w.third_party);

  CsvWriter tv({"link_id", "date", "true_volume"});
  for (const auto& [key, v] : w.true_volume) {
    tv.field(key.first);
    tv.field(Date::from_serial(key.second).to_string());
    tv.field(v);
    tv.end_row();
  }
  tv.save(dir + "/truth/volumes.csv");

  CsvWriter ex({"link_id"});
  for (const auto& id : w.extreme_links) {
    ex.field(id);
    ex.end_row();
  }
  ex.save(dir + "/truth/extreme_links.csv");

  json meta;
  meta["seed"] = w.config.seed;
  meta["planted_beta"] = w.config.planted_beta;
  write_file_bytes(dir + "/truth/meta.json", meta.dump(2) + "\n");

  json manifest;
  manifest["format_version"] = 1;
  manifest["kind"] = "synth_bundle";
  manifest["seed"] = w.config.seed;
  manifest["config"] = w.config.to_json();
  json files;
  for (const char* name :
       {"links.geojson", "zones.csv", "lgas.csv", "station_sites.csv", "station_obs.csv",
        "counts.csv", "third_party.csv", "truth/volumes.csv", "truth/extreme_links.csv",
        "truth/meta.json"}) {
    files[name] = digest_file(dir + "/" + name);
  }
  manifest["files"] = files;
  write_file_bytes(dir + "/synth_manifest.json", manifest.dump(2) + "\n");
}

TruthTable read_truth(const std::string& dir) {
  TruthTable t;
  const json meta = json::parse(read_file_bytes(dir + "/truth/meta.json"));
  t.seed = meta.at("seed").get<std::uint64_t>();
  t.planted_beta = meta.at("planted_beta").get<double>();

  const CsvTable tv = read_csv(dir + "/truth/volumes.csv");
  const auto c_link = tv.col("link_id");
  const auto c_date = tv.col("date");
  const auto c_vol = tv.col("true_volume");
  for (const auto& row : tv.rows) {
    t.volume[{row[c_link], Date::parse(row[c_date]).serial()}] = std::stod(row[c_vol]);
  }
  const CsvTable ex = read_csv(dir + "/truth/extreme_links.csv");
  const auto e_link = ex.col("link_id");
  for (const auto& row : ex.rows) t.extreme_links.insert(row[e_link]);
  return t;
}

json oracle_report(const TruthTable& truth, const OracleInputs& in) {
  if (in.seed != truth.seed) {
    throw std::invalid_argument("oracle: pipeline seed " + std::to_string(in.seed) +
                                " does not match bundle seed " + std::to_string(truth.seed));
  }
  if (!in.results) throw std::invalid_argument("oracle: no results");
  if (!in.length_km) throw std::invalid_argument("oracle: no link lengths");

  json rep;
  rep["format_version"] = 1;
  rep["seed"] = truth.seed;
  rep["planted_beta"] = truth.planted_beta;
  rep["fitted_base_beta"] = in.fitted_base_beta;
  rep["beta_recovery_rel_error"] =
      std::abs(in.fitted_base_beta - truth.planted_beta) / truth.planted_beta;

  // Link-level fit of mitigated estimates against true volumes.
  double ss_res = 0.0, sum = 0.0, sum_sq = 0.0, true_km = 0.0;
  std::size_t n = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : *in.results) {
    const auto it = truth.volume.find({r.link_id, r.date.serial()});
    if (it == truth.volume.end()) {
      throw std::invalid_argument("oracle: no true volume for (" + r.link_id + ", " +
                                  r.date.to_string() + ")");
    }
    const double v = it->second;
    ss_res += (r.mitigated_estimate - v) * (r.mitigated_estimate - v);
    sum += v;
    sum_sq += v * v;
    ++n;
    const auto lit = in.length_km->find(r.link_id);
    if (lit == in.length_km->end()) {
      throw std::invalid_argument("oracle: no length for link '" + r.link_id + "'");
    }
    true_km += v * lit->second;
    const bool planted = truth.extreme_links.count(r.link_id) > 0;
    if (r.outlier && planted) ++tp;
    if (r.outlier && !planted) ++fp;
    if (!r.outlier && planted) ++fn;
  }
  if (n < 2) throw std::invalid_argument("oracle: too few joined rows");
  const double mean = sum / static_cast<double>(n);
  const double ss_tot = sum_sq - static_cast<double>(n) * mean * mean;
  rep["link_r2"] = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  rep["rows"] = n;

  in.params.check();
  const double true_trips = true_km / (in.params.d / in.params.gamma);
  rep["true_km"] = true_km;
  rep["true_trips"] = true_trips;
  rep["reported_km"] = in.aggregate.km;
  rep["reported_trips"] = in.aggregate.trips;
  rep["aggregate_km_rel_error"] =
      true_km > 0.0 ? std::abs(in.aggregate.km - true_km) / true_km : 0.0;
  rep["aggregate_trips_rel_error"] =
      true_trips > 0.0 ? std::abs(in.aggregate.trips - true_trips) / true_trips : 0.0;

  // Row-level outlier detection vs planted extreme links. With nothing
  // planted and nothing flagged both scores are a clean 1.
  rep["outlier_true_positives"] = tp;
  rep["outlier_false_positives"] = fp;
  rep["outlier_false_negatives"] = fn;
  rep["outlier_precision"] =
      (tp + fp) == 0 ? (fn == 0 ? 1.0 : 0.0) : static_cast<double>(tp) / static_cast<double>(tp + fp);
  rep["outlier_recall"] =
      (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);

  if (!in.family_test_r2.empty()) {
    std::vector<std::pair<std::string, double>> ranked(in.family_test_r2.begin(),
                                                       in.family_test_r2.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    json order = json::array();
    for (const auto& [fam, r2] : ranked) order.push_back({{"family", fam}, {"test_r2", r2}});
    rep["family_ranking_by_test_r2"] = order;
  }
  return rep;
}

}  // namespace linkvol::synth
