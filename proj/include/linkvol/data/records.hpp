#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linkvol/common/date.hpp"

namespace linkvol::data {

enum class Mode { walk, cycle };

Mode parse_mode(const std::string& s);
std::string to_string(Mode m);

// One network edge. Geometry is an ordered lon/lat polyline in degrees.
struct LinkRecord {
  std::string link_id;
  Mode mode = Mode::walk;
  double length_m = 0.0;
  std::vector<std::array<double, 2>> geometry;
  double avg_slope_pct = 0.0;
  double max_slope_pct = 0.0;
  bool footway = false;
  bool residential = false;
  bool tertiary = false;
  bool dedicated_bicycle = false;
  std::string zone_id;             // empty = unassigned
  std::string lga_id;              // empty = unassigned
  std::string weather_station_id;  // empty = unassigned
  std::string air_station_id;      // empty = unassigned
};

struct ZoneRecord {
  std::string zone_id;
  double area_sqkm = 0.0;
  double population = 0.0;
  double median_weekly_income_aud = 0.0;
  std::map<std::string, double> land_use_areas;  // class name -> area km^2

  double population_density() const { return population / area_sqkm; }
};

struct LgaRecord {
  std::string lga_id;
  double area_sqkm = 0.0;
  double poi_count = 0.0;
  double pct_walk_only = 0.0;    // fraction in [0,1]
  double pct_walk_linked = 0.0;  // fraction in [0,1]

  double poi_density() const { return poi_count / area_sqkm; }
};

enum class StationKind { weather, air };

StationKind parse_station_kind(const std::string& s);
std::string to_string(StationKind k);

// Where a station sits; observations reference it by id.
struct StationSite {
  std::string station_id;
  StationKind kind = StationKind::weather;
  double lon = 0.0;
  double lat = 0.0;
};

// Observation variable names admitted in station files.
const std::vector<std::string>& station_variables();

// One station-day of readings. Missing variables are absent from the map,
// never encoded as a sentinel value.
struct StationObservation {
  std::string station_id;
  StationKind kind = StationKind::weather;
  Date date;
  std::map<std::string, double> values;
};

struct CountObservation {
  std::string site_id;
  std::string link_id;
  Date date;
  Mode mode = Mode::walk;
  double observed_count = 0.0;  // integer-valued, >= 0
  std::optional<double> third_party_count;
};

// Network-wide third-party coverage row (mobile/crowdsourced count).
struct ThirdPartyCount {
  std::string link_id;
  Date date;
  Mode mode = Mode::walk;
  double count = 0.0;
};

struct DescriptiveStats {
  double min = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double std = 0.0;  // population standard deviation
};

// Throws on an empty input. Std is population (divide by N), which the
// emitted report headers state explicitly.
DescriptiveStats descriptive_stats(const std::vector<double>& values);

}  // namespace linkvol::data
