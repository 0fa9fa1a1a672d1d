#include "linkvol/data/records.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace linkvol::data {

Mode parse_mode(const std::string& s) {
  if (s == "walk") return Mode::walk;
  if (s == "cycle") return Mode::cycle;
  throw std::invalid_argument("unknown mode '" + s + "' (expected walk or cycle)");
}

std::string to_string(Mode m) { return m == Mode::walk ? "walk" : "cycle"; }

StationKind parse_station_kind(const std::string& s) {
  if (s == "weather") return StationKind::weather;
  if (s == "air") return StationKind::air;
  throw std::invalid_argument("unknown station kind '" + s + "' (expected weather or air)");
}

std::string to_string(StationKind k) { return k == StationKind::weather ? "weather" : "air"; }

const std::vector<std::string>& station_variables() {
  static const std::vector<std::string> vars = {"precip_mm", "tmin_c", "tmax_c", "temp_c",
                                                "pm25",      "pm10",   "neph",   "no",
                                                "no2",       "o3"};
  return vars;
}

DescriptiveStats descriptive_stats(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("descriptive_stats: empty input");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double sum = 0.0;
  for (const double v : sorted) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : sorted) ss += (v - mean) * (v - mean);
  DescriptiveStats s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.mean = mean;
  s.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.std = std::sqrt(ss / static_cast<double>(n));
  return s;
}

}  // namespace linkvol::data
