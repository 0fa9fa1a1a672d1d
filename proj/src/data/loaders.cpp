#include "linkvol/data/loaders.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "linkvol/common/io.hpp"

namespace linkvol::data {

namespace {

using nlohmann::json;

double parse_num(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw std::runtime_error(context + ": not a finite number: '" + s + "'");
  }
  return v;
}

bool parse_bool01(const std::string& s, const std::string& context) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false" || s.empty()) return false;
  throw std::runtime_error(context + ": expected 0/1 boolean, got '" + s + "'");
}

std::string row_ctx(const std::string& source, std::size_t row_idx) {
  // +2: header line plus 1-based numbering.
  return source + " row " + std::to_string(row_idx + 2);
}

// "LINESTRING (lon lat, lon lat, ...)"
std::vector<std::array<double, 2>> parse_wkt_linestring(const std::string& wkt,
                                                        const std::string& context) {
  const auto open = wkt.find('(');
  const auto close = wkt.rfind(')');
  if (wkt.compare(0, 10, "LINESTRING") != 0 || open == std::string::npos ||
      close == std::string::npos || close < open) {
    throw std::runtime_error(context + ": malformed WKT LINESTRING: '" + wkt + "'");
  }
  std::vector<std::array<double, 2>> pts;
  std::string body = wkt.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    std::string pair = body.substr(pos, comma - pos);
    const auto first = pair.find_first_not_of(' ');
    if (first == std::string::npos) throw std::runtime_error(context + ": empty WKT coordinate");
    pair = pair.substr(first);
    const auto space = pair.find(' ');
    if (space == std::string::npos) {
      throw std::runtime_error(context + ": malformed WKT coordinate '" + pair + "'");
    }
    const double lon = parse_num(pair.substr(0, space), context);
    auto rest = pair.substr(space + 1);
    while (!rest.empty() && rest.back() == ' ') rest.pop_back();
    const double lat = parse_num(rest, context);
    pts.push_back({lon, lat});
    pos = comma + 1;
  }
  return pts;
}

void validate_link(const LinkRecord& link, const std::string& context) {
  if (!(link.length_m > 0.0)) {
    throw std::runtime_error(context + ": link '" + link.link_id + "' has nonpositive length");
  }
  if (link.geometry.size() < 2) {
    throw std::runtime_error(context + ": link '" + link.link_id +
                             "' has malformed geometry (needs >= 2 points)");
  }
  if (link.avg_slope_pct < 0.0 || link.max_slope_pct < link.avg_slope_pct) {
    throw std::runtime_error(context + ": link '" + link.link_id +
                             "' violates max_slope >= avg_slope >= 0");
  }
  if (link.mode == Mode::walk && link.dedicated_bicycle) {
    throw std::runtime_error(context + ": link '" + link.link_id +
                             "' carries dedicated_bicycle tag on a walk link");
  }
}

std::vector<LinkRecord> load_links_geojson(const std::string& path, Mode mode) {
  json doc;
  try {
    doc = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": invalid GeoJSON: " + e.what());
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw std::runtime_error(path + ": expected a FeatureCollection with features[]");
  }
  std::vector<LinkRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t idx = 0;
  for (const auto& feat : doc["features"]) {
    const std::string ctx = path + " feature " + std::to_string(idx++);
    if (!feat.contains("properties") || !feat.contains("geometry")) {
      throw std::runtime_error(ctx + ": feature lacks properties or geometry");
    }
    const auto& props = feat["properties"];
    const auto& geom = feat["geometry"];
    if (geom.value("type", "") != std::string("LineString")) {
      throw std::runtime_error(ctx + ": geometry type must be LineString");
    }
    LinkRecord link;
    link.link_id = props.value("link_id", "");
    if (link.link_id.empty()) throw std::runtime_error(ctx + ": missing link_id");
    link.mode = parse_mode(props.value("mode", to_string(mode)));
    if (link.mode != mode) continue;
    link.length_m = props.value("length_m", 0.0);
    link.avg_slope_pct = props.value("avg_slope_pct", 0.0);
    link.max_slope_pct = props.value("max_slope_pct", 0.0);
    link.footway = props.value("footway", 0) != 0;
    link.residential = props.value("residential", 0) != 0;
    link.tertiary = props.value("tertiary", 0) != 0;
    link.dedicated_bicycle = props.value("dedicated_bicycle", 0) != 0;
    link.zone_id = props.value("zone_id", "");
    link.lga_id = props.value("lga_id", "");
    link.weather_station_id = props.value("weather_station_id", "");
    link.air_station_id = props.value("air_station_id", "");
    for (const auto& coord : geom["coordinates"]) {
      if (!coord.is_array() || coord.size() < 2) {
        throw std::runtime_error(ctx + ": malformed coordinate in link '" + link.link_id + "'");
      }
      link.geometry.push_back({coord[0].get<double>(), coord[1].get<double>()});
    }
    validate_link(link, ctx);
    if (!seen.insert(link.link_id).second) {
      throw std::runtime_error(ctx + ": duplicate link_id '" + link.link_id + "'");
    }
    out.push_back(std::move(link));
  }
  return out;
}

std::vector<LinkRecord> load_links_csv(const std::string& path, Mode mode) {
  const CsvTable t = read_csv(path);
  const std::size_t c_id = t.col("link_id");
  const std::size_t c_mode = t.col("mode");
  const std::size_t c_len = t.col("length_m");
  const std::size_t c_avg = t.col("avg_slope_pct");
  const std::size_t c_max = t.col("max_slope_pct");
  const std::size_t c_foot = t.col("footway");
  const std::size_t c_res = t.col("residential");
  const std::size_t c_ter = t.col("tertiary");
  const std::size_t c_ded = t.col("dedicated_bicycle");
  const auto c_zone = t.col_opt("zone_id");
  const auto c_lga = t.col_opt("lga_id");
  const auto c_ws = t.col_opt("weather_station_id");
  const auto c_as = t.col_opt("air_station_id");
  const std::size_t c_wkt = t.col("wkt");

  std::vector<LinkRecord> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    LinkRecord link;
    link.link_id = row[c_id];
    if (link.link_id.empty()) throw std::runtime_error(ctx + ": missing link_id");
    link.mode = parse_mode(row[c_mode]);
    if (link.mode != mode) continue;
    link.length_m = parse_num(row[c_len], ctx);
    link.avg_slope_pct = parse_num(row[c_avg], ctx);
    link.max_slope_pct = parse_num(row[c_max], ctx);
    link.footway = parse_bool01(row[c_foot], ctx);
    link.residential = parse_bool01(row[c_res], ctx);
    link.tertiary = parse_bool01(row[c_ter], ctx);
    link.dedicated_bicycle = parse_bool01(row[c_ded], ctx);
    if (c_zone) link.zone_id = row[*c_zone];
    if (c_lga) link.lga_id = row[*c_lga];
    if (c_ws) link.weather_station_id = row[*c_ws];
    if (c_as) link.air_station_id = row[*c_as];
    link.geometry = parse_wkt_linestring(row[c_wkt], ctx);
    validate_link(link, ctx);
    if (!seen.insert(link.link_id).second) {
      throw std::runtime_error(ctx + ": duplicate link_id '" + link.link_id + "'");
    }
    out.push_back(std::move(link));
  }
  return out;
}

bool is_geojson_path(const std::string& path) {
  auto p = path;
  if (p.size() > 3 && p.compare(p.size() - 3, 3, ".gz") == 0) p = p.substr(0, p.size() - 3);
  return (p.size() > 8 && p.compare(p.size() - 8, 8, ".geojson") == 0) ||
         (p.size() > 5 && p.compare(p.size() - 5, 5, ".json") == 0);
}

}  // namespace

std::vector<LinkRecord> load_links(const std::string& path, Mode mode) {
  return is_geojson_path(path) ? load_links_geojson(path, mode) : load_links_csv(path, mode);
}

std::vector<ZoneRecord> load_zones(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_id = t.col("zone_id");
  const std::size_t c_area = t.col("area_sqkm");
  const std::size_t c_pop = t.col("population");
  const std::size_t c_inc = t.col("median_weekly_income_aud");
  std::vector<std::pair<std::size_t, std::string>> lu_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].rfind("lu_", 0) == 0) lu_cols.emplace_back(i, t.header[i].substr(3));
  }
  std::vector<ZoneRecord> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    ZoneRecord z;
    z.zone_id = row[c_id];
    z.area_sqkm = parse_num(row[c_area], ctx);
    z.population = parse_num(row[c_pop], ctx);
    z.median_weekly_income_aud = parse_num(row[c_inc], ctx);
    if (!(z.area_sqkm > 0.0)) throw std::runtime_error(ctx + ": area_sqkm must be > 0");
    if (z.population < 0.0 || z.median_weekly_income_aud < 0.0) {
      throw std::runtime_error(ctx + ": negative population or income");
    }
    for (const auto& [col, name] : lu_cols) {
      if (row[col].empty()) continue;
      const double a = parse_num(row[col], ctx);
      if (a < 0.0) throw std::runtime_error(ctx + ": negative land-use area for '" + name + "'");
      z.land_use_areas[name] = a;
    }
    if (!seen.insert(z.zone_id).second) {
      throw std::runtime_error(ctx + ": duplicate zone_id '" + z.zone_id + "'");
    }
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<LgaRecord> load_lgas(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_id = t.col("lga_id");
  const std::size_t c_area = t.col("area_sqkm");
  const std::size_t c_poi = t.col("poi_count");
  const std::size_t c_wo = t.col("pct_walk_only");
  const std::size_t c_wl = t.col("pct_walk_linked");
  std::vector<LgaRecord> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    LgaRecord g;
    g.lga_id = row[c_id];
    g.area_sqkm = parse_num(row[c_area], ctx);
    g.poi_count = parse_num(row[c_poi], ctx);
    g.pct_walk_only = parse_num(row[c_wo], ctx);
    g.pct_walk_linked = parse_num(row[c_wl], ctx);
    if (!(g.area_sqkm > 0.0)) throw std::runtime_error(ctx + ": area_sqkm must be > 0");
    if (g.poi_count < 0.0) throw std::runtime_error(ctx + ": negative poi_count");
    if (g.pct_walk_only < 0.0 || g.pct_walk_only > 1.0 || g.pct_walk_linked < 0.0 ||
        g.pct_walk_linked > 1.0) {
      throw std::runtime_error(ctx + ": walk trip fractions must lie in [0,1]");
    }
    if (!seen.insert(g.lga_id).second) {
      throw std::runtime_error(ctx + ": duplicate lga_id '" + g.lga_id + "'");
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<StationSite> load_station_sites(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_id = t.col("station_id");
  const std::size_t c_kind = t.col("kind");
  const std::size_t c_lon = t.col("lon");
  const std::size_t c_lat = t.col("lat");
  std::vector<StationSite> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    StationSite s;
    s.station_id = row[c_id];
    s.kind = parse_station_kind(row[c_kind]);
    s.lon = parse_num(row[c_lon], ctx);
    s.lat = parse_num(row[c_lat], ctx);
    if (!seen.insert({row[c_kind], s.station_id}).second) {
      throw std::runtime_error(ctx + ": duplicate station '" + s.station_id + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<StationObservation> load_station_obs(const std::string& path,
                                                 const std::vector<StationSite>& sites,
                                                 LoadReport* report) {
  const CsvTable t = read_csv(path);
  const std::size_t c_id = t.col("station_id");
  const std::size_t c_date = t.col("date");
  std::vector<std::pair<std::size_t, std::string>> var_cols;
  for (const auto& var : station_variables()) {
    if (auto c = t.col_opt(var)) var_cols.emplace_back(*c, var);
  }
  std::unordered_map<std::string, StationKind> kind_of;
  for (const auto& s : sites) kind_of[s.station_id] = s.kind;

  static const std::set<std::string> pollutant = {"pm25", "pm10", "neph", "no", "no2", "o3"};
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::vector<StationObservation> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    ++rep.rows_in;
    try {
      StationObservation obs;
      obs.station_id = row[c_id];
      const auto it = kind_of.find(obs.station_id);
      if (it == kind_of.end()) {
        throw std::runtime_error("unknown station '" + obs.station_id + "'");
      }
      obs.kind = it->second;
      obs.date = Date::parse(row[c_date]);
      for (const auto& [col, var] : var_cols) {
        if (row[col].empty()) continue;  // absent, never a sentinel
        const double v = parse_num(row[col], ctx);
        if (var == "precip_mm" && v < 0.0) throw std::runtime_error("negative precip_mm");
        if (v < 0.0 && pollutant.count(var)) ++rep.negative_pollutant_flags;
        obs.values[var] = v;
      }
      out.push_back(std::move(obs));
      ++rep.accepted;
    } catch (const std::exception& e) {
      rep.rejected.push_back(ctx + ": " + e.what());
    }
  }
  return out;
}

std::vector<CountObservation> load_counts(const std::string& path, Mode mode,
                                          LoadReport* report) {
  const CsvTable t = read_csv(path);
  const std::size_t c_site = t.col("site_id");
  const std::size_t c_link = t.col("link_id");
  const std::size_t c_date = t.col("date");
  const std::size_t c_mode = t.col("mode");
  const std::size_t c_obs = t.col("observed_count");
  const std::size_t c_tp = t.col("third_party_count");
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::vector<CountObservation> out;
  std::set<std::pair<std::string, std::int64_t>> seen;  // (site, date) per requested mode
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    Mode row_mode;
    try {
      row_mode = parse_mode(row[c_mode]);
    } catch (const std::exception& e) {
      ++rep.rows_in;
      rep.rejected.push_back(ctx + ": " + e.what());
      continue;
    }
    if (row_mode != mode) {
      ++rep.skipped_other_mode;
      continue;
    }
    ++rep.rows_in;
    try {
      CountObservation c;
      c.site_id = row[c_site];
      c.link_id = row[c_link];
      c.date = Date::parse(row[c_date]);
      c.mode = row_mode;
      c.observed_count = parse_num(row[c_obs], ctx);
      if (c.observed_count < 0.0) throw std::runtime_error("negative observed_count");
      if (std::abs(c.observed_count - std::round(c.observed_count)) > 1e-9) {
        throw std::runtime_error("observed_count must be integer-valued");
      }
      if (!row[c_tp].empty()) {
        const double tp = parse_num(row[c_tp], ctx);
        if (tp < 0.0) throw std::runtime_error("negative third_party_count");
        c.third_party_count = tp;
      }
      if (!seen.insert({c.site_id, c.date.serial()}).second) {
        throw std::runtime_error("duplicate (site_id, date) pair for site '" + c.site_id + "'");
      }
      out.push_back(std::move(c));
      ++rep.accepted;
    } catch (const std::exception& e) {
      rep.rejected.push_back(ctx + ": " + e.what());
    }
  }
  return out;
}

std::vector<ThirdPartyCount> load_third_party(const std::string& path, Mode mode) {
  const CsvTable t = read_csv(path);
  const std::size_t c_link = t.col("link_id");
  const std::size_t c_date = t.col("date");
  const std::size_t c_mode = t.col("mode");
  const std::size_t c_count = t.col("count");
  std::vector<ThirdPartyCount> out;
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    if (parse_mode(row[c_mode]) != mode) continue;
    ThirdPartyCount tp;
    tp.link_id = row[c_link];
    tp.date = Date::parse(row[c_date]);
    tp.mode = mode;
    tp.count = parse_num(row[c_count], ctx);
    if (tp.count < 0.0) throw std::runtime_error(ctx + ": negative count");
    if (!seen.insert({tp.link_id, tp.date.serial()}).second) {
      throw std::runtime_error(ctx + ": duplicate (link_id, date) for link '" + tp.link_id + "'");
    }
    out.push_back(std::move(tp));
  }
  return out;
}

std::vector<ElevationProfile> load_elevation(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_link = t.col("link_id");
  const std::size_t c_chain = t.col("chainage_m");
  const std::size_t c_elev = t.col("elevation_m");
  std::vector<ElevationProfile> out;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = row_ctx(path, r);
    const std::string id = row[c_link];
    auto it = index.find(id);
    if (it == index.end()) {
      index.emplace(id, out.size());
      out.push_back({id, {}});
      it = index.find(id);
    }
    out[it->second].samples.emplace_back(parse_num(row[c_chain], ctx),
                                         parse_num(row[c_elev], ctx));
  }
  return out;
}

}  // namespace linkvol::data
