#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "linkvol/data/records.hpp"

namespace linkvol::geo {

/// Great-circle distance in metres between two lon/lat points (degrees).
double haversine_m(double lon1, double lat1, double lon2, double lat2);

/// Sum of haversine segment lengths along a polyline. Needs >= 2 points.
double polyline_length_m(const std::vector<std::array<double, 2>>& pts);

/// Point at half the arc length along the polyline, interpolated linearly
/// within the containing segment. This is what "link position" means for all
/// nearest-station and zone-membership queries.
std::array<double, 2> polyline_midpoint(const std::vector<std::array<double, 2>>& pts);

// Land-use mix for one zone. Entropy is normalised by ln(n) where n counts
// the classes with nonzero area in this zone; a single-class zone scores 0.
struct LandUseProfile {
  std::vector<double> shares;  // nonzero, sum to 1

  static LandUseProfile from_areas(const std::map<std::string, double>& areas);
  double entropy() const;
};

/// Convenience over from_areas().entropy(); all-zero areas throw.
double lum_entropy(const std::map<std::string, double>& areas);

/// Parkland share of total land-use area; 0 when the class is absent.
double parkland_share(const std::map<std::string, double>& areas,
                      const std::string& park_class = "parkland");

/// Nearest station of the given kind to each link's midpoint. Ties break on
/// the lexicographically smallest station_id. Throws if no station of that
/// kind exists. Returns link index -> station_id.
std::vector<std::string> assign_nearest_station(const std::vector<data::LinkRecord>& links,
                                                const std::vector<data::StationSite>& stations,
                                                data::StationKind kind);

struct SlopeSummary {
  double avg_slope_pct = 0.0;  // length-weighted mean of |rise/run| * 100
  double max_slope_pct = 0.0;
};

/// Slopes from a chainage/elevation profile. Samples are sorted by chainage
/// first; duplicate chainages are an error. Needs >= 2 samples.
SlopeSummary slopes_from_elevation(std::vector<std::pair<double, double>> samples);

// Zone polygons for the point-in-polygon join, keyed by zone id. Rings are
// lon/lat, closed or open (the test treats them as closed).
struct ZonePolygon {
  std::string zone_id;
  std::vector<std::vector<std::array<double, 2>>> rings;  // [0] outer, rest holes
};

std::vector<ZonePolygon> load_zone_polygons(const std::string& geojson_path);

/// Even-odd ray-casting test across all rings.
bool point_in_polygon(const ZonePolygon& poly, double lon, double lat);

struct ZonalJoinReport {
  std::size_t already_assigned = 0;
  std::size_t joined = 0;
  std::size_t unassigned = 0;
  std::vector<std::string> unassigned_ids;
};

/// Fills empty zone_id fields by midpoint containment. Links with an explicit
/// zone_id pass through untouched. First containing polygon in input order
/// wins; links outside every polygon stay unassigned and are reported.
ZonalJoinReport zonal_join(std::vector<data::LinkRecord>& links,
                           const std::vector<ZonePolygon>& zones);

}  // namespace linkvol::geo
