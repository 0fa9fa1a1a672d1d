#include "linkvol/data/writers.hpp"

#include <json.hpp>

#include "linkvol/common/io.hpp"

namespace linkvol::data {

namespace {

std::string wkt_linestring(const std::vector<std::array<double, 2>>& pts) {
  std::string s = "LINESTRING (";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ", ";
    s += fmt_double(pts[i][0]);
    s += ' ';
    s += fmt_double(pts[i][1]);
  }
  s += ')';
  return s;
}

}  // namespace

void write_links_geojson(const std::string& path, const std::vector<LinkRecord>& links) {
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  auto& features = doc["features"] = nlohmann::ordered_json::array();
  for (const auto& l : links) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    auto& p = f["properties"];
    p["link_id"] = l.link_id;
    p["mode"] = to_string(l.mode);
    p["length_m"] = l.length_m;
    p["avg_slope_pct"] = l.avg_slope_pct;
    p["max_slope_pct"] = l.max_slope_pct;
    p["footway"] = l.footway ? 1 : 0;
    p["residential"] = l.residential ? 1 : 0;
    p["tertiary"] = l.tertiary ? 1 : 0;
    p["dedicated_bicycle"] = l.dedicated_bicycle ? 1 : 0;
    p["zone_id"] = l.zone_id;
    p["lga_id"] = l.lga_id;
    p["weather_station_id"] = l.weather_station_id;
    p["air_station_id"] = l.air_station_id;
    auto& g = f["geometry"];
    g["type"] = "LineString";
    auto& coords = g["coordinates"] = nlohmann::ordered_json::array();
    for (const auto& pt : l.geometry) coords.push_back({pt[0], pt[1]});
    features.push_back(std::move(f));
  }
  write_file_bytes(path, doc.dump(2) + "\n");
}

void write_links_csv(const std::string& path, const std::vector<LinkRecord>& links) {
  CsvWriter w({"link_id", "mode", "length_m", "avg_slope_pct", "max_slope_pct", "footway",
               "residential", "tertiary", "dedicated_bicycle", "zone_id", "lga_id",
               "weather_station_id", "air_station_id", "wkt"});
  for (const auto& l : links) {
    w.field(l.link_id);
    w.field(to_string(l.mode));
    w.field(l.length_m);
    w.field(l.avg_slope_pct);
    w.field(l.max_slope_pct);
    w.field(static_cast<std::int64_t>(l.footway));
    w.field(static_cast<std::int64_t>(l.residential));
    w.field(static_cast<std::int64_t>(l.tertiary));
    w.field(static_cast<std::int64_t>(l.dedicated_bicycle));
    w.field(l.zone_id);
    w.field(l.lga_id);
    w.field(l.weather_station_id);
    w.field(l.air_station_id);
    w.field(wkt_linestring(l.geometry));
    w.end_row();
  }
  w.save(path);
}

void write_zones_csv(const std::string& path, const std::vector<ZoneRecord>& zones) {
  // Union of land-use classes across all zones, sorted for a stable header.
  std::map<std::string, bool> classes;
  for (const auto& z : zones)
    for (const auto& [name, _] : z.land_use_areas) classes[name] = true;
  std::vector<std::string> header = {"zone_id", "area_sqkm", "population",
                                     "median_weekly_income_aud"};
  for (const auto& [name, _] : classes) header.push_back("lu_" + name);
  CsvWriter w(header);
  for (const auto& z : zones) {
    w.field(z.zone_id);
    w.field(z.area_sqkm);
    w.field(z.population);
    w.field(z.median_weekly_income_aud);
    for (const auto& [name, _] : classes) {
      auto it = z.land_use_areas.find(name);
      if (it == z.land_use_areas.end())
        w.field(std::string{});
      else
        w.field(it->second);
    }
    w.end_row();
  }
  w.save(path);
}

void write_lgas_csv(const std::string& path, const std::vector<LgaRecord>& lgas) {
  CsvWriter w({"lga_id", "area_sqkm", "poi_count", "pct_walk_only", "pct_walk_linked"});
  for (const auto& g : lgas) {
    w.field(g.lga_id);
    w.field(g.area_sqkm);
    w.field(g.poi_count);
    w.field(g.pct_walk_only);
    w.field(g.pct_walk_linked);
    w.end_row();
  }
  w.save(path);
}

void write_station_sites_csv(const std::string& path, const std::vector<StationSite>& sites) {
  CsvWriter w({"station_id", "kind", "lon", "lat"});
  for (const auto& s : sites) {
    w.field(s.station_id);
    w.field(to_string(s.kind));
    w.field(s.lon);
    w.field(s.lat);
    w.end_row();
  }
  w.save(path);
}

void write_station_obs_csv(const std::string& path, const std::vector<StationObservation>& obs) {
  std::vector<std::string> header = {"station_id", "date"};
  for (const auto& var : station_variables()) header.push_back(var);
  CsvWriter w(header);
  for (const auto& o : obs) {
    w.field(o.station_id);
    w.field(o.date.to_string());
    for (const auto& var : station_variables()) {
      auto it = o.values.find(var);
      if (it == o.values.end())
        w.field(std::string{});
      else
        w.field(it->second);
    }
    w.end_row();
  }
  w.save(path);
}

void write_counts_csv(const std::string& path, const std::vector<CountObservation>& counts) {
  CsvWriter w({"site_id", "link_id", "date", "mode", "observed_count", "third_party_count"});
  for (const auto& c : counts) {
    w.field(c.site_id);
    w.field(c.link_id);
    w.field(c.date.to_string());
    w.field(to_string(c.mode));
    w.field(c.observed_count);
    if (c.third_party_count)
      w.field(*c.third_party_count);
    else
      w.field(std::string{});
    w.end_row();
  }
  w.save(path);
}

void write_third_party_csv(const std::string& path, const std::vector<ThirdPartyCount>& rows) {
  CsvWriter w({"link_id", "date", "mode", "count"});
  for (const auto& r : rows) {
    w.field(r.link_id);
    w.field(r.date.to_string());
    w.field(to_string(r.mode));
    w.field(r.count);
    w.end_row();
  }
  w.save(path);
}

}  // namespace linkvol::data
