#pragma once

#include <string>
#include <vector>

#include "linkvol/data/records.hpp"

namespace linkvol::data {

// Canonical serializers. Loading what these write reproduces the records
// exactly; the round trip is covered by tests and exercised by the pipeline.
void write_links_geojson(const std::string& path, const std::vector<LinkRecord>& links);
void write_links_csv(const std::string& path, const std::vector<LinkRecord>& links);
void write_zones_csv(const std::string& path, const std::vector<ZoneRecord>& zones);
void write_lgas_csv(const std::string& path, const std::vector<LgaRecord>& lgas);
void write_station_sites_csv(const std::string& path, const std::vector<StationSite>& sites);
void write_station_obs_csv(const std::string& path, const std::vector<StationObservation>& obs);
void write_counts_csv(const std::string& path, const std::vector<CountObservation>& counts);
void write_third_party_csv(const std::string& path, const std::vector<ThirdPartyCount>& rows);

}  // namespace linkvol::data
