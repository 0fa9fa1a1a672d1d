#include "linkvol/geo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "linkvol/common/io.hpp"

namespace linkvol::geo {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}  // namespace

double haversine_m(double lon1, double lat1, double lon2, double lat2) {
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

double polyline_length_m(const std::vector<std::array<double, 2>>& pts) {
  if (pts.size() < 2) throw std::invalid_argument("polyline needs >= 2 points");
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    total += haversine_m(pts[i - 1][0], pts[i - 1][1], pts[i][0], pts[i][1]);
  }
  return total;
}

std::array<double, 2> polyline_midpoint(const std::vector<std::array<double, 2>>& pts) {
  const double half = polyline_length_m(pts) / 2.0;
  double walked = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = haversine_m(pts[i - 1][0], pts[i - 1][1], pts[i][0], pts[i][1]);
    if (walked + seg >= half) {
      const double t = seg > 0.0 ? (half - walked) / seg : 0.0;
      return {pts[i - 1][0] + t * (pts[i][0] - pts[i - 1][0]),
              pts[i - 1][1] + t * (pts[i][1] - pts[i - 1][1])};
    }
    walked += seg;
  }
  return pts.back();  // zero-length polyline
}

LandUseProfile LandUseProfile::from_areas(const std::map<std::string, double>& areas) {
  double total = 0.0;
  for (const auto& [name, a] : areas) {
    if (a < 0.0) throw std::invalid_argument("negative land-use area for '" + name + "'");
    total += a;
  }
  if (total <= 0.0) throw std::invalid_argument("land-use areas sum to zero");
  LandUseProfile p;
  for (const auto& [name, a] : areas) {
    if (a > 0.0) p.shares.push_back(a / total);
  }
  return p;
}

double LandUseProfile::entropy() const {
  const std::size_t n = shares.size();
  if (n <= 1) return 0.0;
  double h = 0.0;
  for (const double s : shares) h -= s * std::log(s);
  return h / std::log(static_cast<double>(n));
}

double lum_entropy(const std::map<std::string, double>& areas) {
  return LandUseProfile::from_areas(areas).entropy();
}

double parkland_share(const std::map<std::string, double>& areas,
                      const std::string& park_class) {
  double total = 0.0;
  for (const auto& [_, a] : areas) total += a;
  if (total <= 0.0) return 0.0;
  const auto it = areas.find(park_class);
  return it == areas.end() ? 0.0 : it->second / total;
}

std::vector<std::string> assign_nearest_station(const std::vector<data::LinkRecord>& links,
                                                const std::vector<data::StationSite>& stations,
                                                data::StationKind kind) {
  std::vector<const data::StationSite*> pool;
  for (const auto& s : stations) {
    if (s.kind == kind) pool.push_back(&s);
  }
  if (pool.empty()) {
    throw std::runtime_error("no stations of kind '" + to_string(kind) + "' to assign");
  }
  std::vector<std::string> out;
  out.reserve(links.size());
  for (const auto& link : links) {
    const auto mid = polyline_midpoint(link.geometry);
    const data::StationSite* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto* s : pool) {
      const double d = haversine_m(mid[0], mid[1], s->lon, s->lat);
      if (d < best_d || (d == best_d && best && s->station_id < best->station_id)) {
        best = s;
        best_d = d;
      }
    }
    out.push_back(best->station_id);
  }
  return out;
}

SlopeSummary slopes_from_elevation(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) throw std::invalid_argument("elevation profile needs >= 2 samples");
  std::sort(samples.begin(), samples.end());
  SlopeSummary s;
  double total_run = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double run = samples[i].first - samples[i - 1].first;
    if (run <= 0.0) throw std::invalid_argument("duplicate or non-increasing chainage");
    const double slope = std::abs(samples[i].second - samples[i - 1].second) / run * 100.0;
    total_run += run;
    weighted += slope * run;
    s.max_slope_pct = std::max(s.max_slope_pct, slope);
  }
  s.avg_slope_pct = weighted / total_run;
  return s;
}

std::vector<ZonePolygon> load_zone_polygons(const std::string& geojson_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file_bytes(geojson_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(geojson_path + ": invalid GeoJSON: " + e.what());
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw std::runtime_error(geojson_path + ": expected a FeatureCollection");
  }
  std::vector<ZonePolygon> out;
  std::size_t idx = 0;
  for (const auto& feat : doc["features"]) {
    const std::string ctx = geojson_path + " feature " + std::to_string(idx++);
    ZonePolygon z;
    z.zone_id = feat.contains("properties") ? feat["properties"].value("zone_id", "") : "";
    if (z.zone_id.empty()) throw std::runtime_error(ctx + ": missing zone_id");
    const auto& geom = feat["geometry"];
    const std::string type = geom.value("type", "");
    auto add_rings = [&](const nlohmann::json& rings) {
      for (const auto& ring : rings) {
        std::vector<std::array<double, 2>> r;
        for (const auto& pt : ring) r.push_back({pt[0].get<double>(), pt[1].get<double>()});
        if (r.size() < 3) throw std::runtime_error(ctx + ": ring with < 3 points");
        z.rings.push_back(std::move(r));
      }
    };
    if (type == "Polygon") {
      add_rings(geom["coordinates"]);
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom["coordinates"]) add_rings(poly);
    } else {
      throw std::runtime_error(ctx + ": geometry must be Polygon or MultiPolygon");
    }
    out.push_back(std::move(z));
  }
  return out;
}

bool point_in_polygon(const ZonePolygon& poly, double lon, double lat) {
  // Even-odd rule over every ring: holes flip the parity back out.
  bool inside = false;
  for (const auto& ring : poly.rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const double xi = ring[i][0], yi = ring[i][1];
      const double xj = ring[j][0], yj = ring[j][1];
      const bool crosses = (yi > lat) != (yj > lat);
      if (crosses && lon < (xj - xi) * (lat - yi) / (yj - yi) + xi) inside = !inside;
    }
  }
  return inside;
}

ZonalJoinReport zonal_join(std::vector<data::LinkRecord>& links,
                           const std::vector<ZonePolygon>& zones) {
  ZonalJoinReport rep;
  for (auto& link : links) {
    if (!link.zone_id.empty()) {
      ++rep.already_assigned;
      continue;
    }
    const auto mid = polyline_midpoint(link.geometry);
    bool found = false;
    for (const auto& z : zones) {
      if (point_in_polygon(z, mid[0], mid[1])) {
        link.zone_id = z.zone_id;
        found = true;
        break;
      }
    }
    if (found) {
      ++rep.joined;
    } else {
      ++rep.unassigned;
      rep.unassigned_ids.push_back(link.link_id);
    }
  }
  return rep;
}

}  // namespace linkvol::geo
