#pragma once

#include <string>
#include <vector>

#include "linkvol/data/records.hpp"

namespace linkvol::data {

// Row-level bookkeeping so ingestion stays auditable: accepted + rejected
// always equals the input row count.
struct LoadReport {
  std::size_t rows_in = 0;
  std::size_t accepted = 0;
  std::vector<std::string> rejected;        // "row N: reason"
  std::size_t negative_pollutant_flags = 0; // admitted but counted
  std::size_t skipped_other_mode = 0;       // not counted in rows_in
};

// Links come either as a GeoJSON FeatureCollection of LineStrings or as CSV
// with a WKT geometry column; the extension picks the parser (.geojson/.json
// vs anything else). Structural violations throw with the offending row.
std::vector<LinkRecord> load_links(const std::string& path, Mode mode);

std::vector<ZoneRecord> load_zones(const std::string& path);
std::vector<LgaRecord> load_lgas(const std::string& path);
std::vector<StationSite> load_station_sites(const std::string& path);

std::vector<StationObservation> load_station_obs(const std::string& path,
                                                 const std::vector<StationSite>& sites,
                                                 LoadReport* report = nullptr);

std::vector<CountObservation> load_counts(const std::string& path, Mode mode,
                                          LoadReport* report = nullptr);

std::vector<ThirdPartyCount> load_third_party(const std::string& path, Mode mode);

// Elevation profiles keyed by link: (chainage_m, elevation_m) samples.
struct ElevationProfile {
  std::string link_id;
  std::vector<std::pair<double, double>> samples;
};
std::vector<ElevationProfile> load_elevation(const std::string& path);

}  // namespace linkvol::data
