#include "linkvol/eval/folds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "linkvol/common/rng.hpp"

namespace linkvol::eval {

namespace {

using nlohmann::json;

json keys_to_json(const std::vector<SiteDateKey>& keys) {
  json arr = json::array();
  for (const auto& [site, date] : keys) arr.push_back({site, date.to_string()});
  return arr;
}

std::vector<SiteDateKey> keys_from_json(const json& arr) {
  std::vector<SiteDateKey> out;
  for (const auto& e : arr) {
    out.emplace_back(e.at(0).get<std::string>(), Date::parse(e.at(1).get<std::string>()));
  }
  return out;
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<std::string>> spatial_split(
    const std::vector<std::string>& sites, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("spatial_split: test_fraction must lie in (0, 1)");
  }
  std::vector<std::string> unique(sites);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() < 2) throw std::invalid_argument("spatial_split: need >= 2 distinct sites");

  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(unique.size())));
  if (n_test == 0 || n_test >= unique.size()) {
    throw std::invalid_argument("spatial_split: a side would be empty at this fraction");
  }

  Rng rng(derive_seed(seed, 0x5137ull));
  rng.shuffle(unique);
  std::vector<std::string> test(unique.begin(), unique.begin() + static_cast<long>(n_test));
  std::vector<std::string> train(unique.begin() + static_cast<long>(n_test), unique.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

std::vector<Fold> spatio_temporal_folds(const std::vector<SiteDateKey>& rows, int k,
                                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("folds: need k >= 2");
  if (rows.empty()) throw std::invalid_argument("folds: no rows");

  std::vector<std::string> sites;
  std::vector<Date> dates;
  for (const auto& [site, date] : rows) {
    sites.push_back(site);
    dates.push_back(date);
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  if (sites.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("folds: fewer distinct sites (" + std::to_string(sites.size()) +
                                ") than folds (" + std::to_string(k) + ")");
  }
  if (dates.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("folds: fewer distinct dates (" + std::to_string(dates.size()) +
                                ") than folds (" + std::to_string(k) + ")");
  }

  // Sites -> k near-equal groups via seeded shuffle + round robin.
  std::vector<std::string> shuffled = sites;
  Rng rng(derive_seed(seed, 0xf01d5ull));
  rng.shuffle(shuffled);
  std::map<std::string, int> site_group;
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    site_group[shuffled[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }

  // Dates -> k contiguous blocks over the sorted distinct dates.
  std::map<Date, int> date_block;
  const std::size_t d = dates.size();
  for (int b = 0; b < k; ++b) {
    const std::size_t lo = d * static_cast<std::size_t>(b) / static_cast<std::size_t>(k);
    const std::size_t hi = d * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(k);
    for (std::size_t i = lo; i < hi; ++i) date_block[dates[i]] = b;
  }

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto& fold = folds[static_cast<std::size_t>(f)];
    for (const auto& s : sites) {
      if (site_group[s] == f) fold.validate_sites.push_back(s);
    }
    for (const auto& dt : dates) {
      if (date_block[dt] == f) fold.held_dates.push_back(dt);
    }
    for (const auto& key : rows) {
      const int sg = site_group[key.first];
      const int db = date_block[key.second];
      if (sg == f) {
        fold.validate_keys.push_back(key);
      } else if (db != f) {
        fold.train_keys.push_back(key);
      }
    }
    if (fold.train_keys.empty()) {
      throw std::invalid_argument("folds: fold " + std::to_string(f) +
                                  " has no training rows; too few sites/dates for k");
    }
  }
  return folds;
}

FoldPlan make_fold_plan(const feat::FeatureMatrix& m, double test_fraction, int k,
                        std::uint64_t seed) {
  FoldPlan plan;
  plan.seed = seed;
  plan.k = k;
  std::tie(plan.train_sites, plan.test_sites) = spatial_split(m.row_sites, test_fraction, seed);

  const std::set<std::string> train_set(plan.train_sites.begin(), plan.train_sites.end());
  std::vector<SiteDateKey> rows;
  for (std::size_t i = 0; i < m.row_sites.size(); ++i) {
    if (train_set.count(m.row_sites[i])) rows.emplace_back(m.row_sites[i], m.keys[i].date);
  }
  plan.folds = spatio_temporal_folds(rows, k, derive_seed(seed, 0xcfull));
  plan.check();
  return plan;
}

void FoldPlan::check() const {
  const std::set<std::string> train_set(train_sites.begin(), train_sites.end());
  for (const auto& s : test_sites) {
    if (train_set.count(s)) {
      throw std::logic_error("fold plan: site '" + s + "' appears on both sides of the split");
    }
  }
  using Key = std::pair<std::string, int>;
  std::set<Key> validated;
  std::size_t validated_rows = 0;
  for (const auto& fold : folds) {
    const std::set<std::string> vsites(fold.validate_sites.begin(), fold.validate_sites.end());
    std::set<int> held;
    for (const auto& dt : fold.held_dates) held.insert(dt.serial());
    for (const auto& [site, date] : fold.train_keys) {
      if (vsites.count(site)) {
        throw std::logic_error("fold plan: fold trains on validate site '" + site + "'");
      }
      if (held.count(date.serial())) {
        throw std::logic_error("fold plan: fold trains on held date " + date.to_string());
      }
    }
    for (const auto& [site, date] : fold.validate_keys) {
      if (!vsites.count(site)) {
        throw std::logic_error("fold plan: validate row at non-validate site '" + site + "'");
      }
      validated.insert({site, date.serial()});
      ++validated_rows;
    }
  }
  if (validated.size() != validated_rows) {
    throw std::logic_error("fold plan: a row is validated by more than one fold");
  }
  for (const auto& fold : folds) {
    for (const auto& [site, date] : fold.train_keys) {
      if (!validated.count({site, date.serial()})) {
        throw std::logic_error("fold plan: training row (" + site + ", " + date.to_string() +
                               ") is never validated; folds do not partition the rows");
      }
    }
  }
}

json FoldPlan::to_json() const {
  json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  j["k"] = k;
  j["train_sites"] = train_sites;
  j["test_sites"] = test_sites;
  auto& arr = j["folds"] = json::array();
  for (const auto& fold : folds) {
    json fj;
    fj["validate_sites"] = fold.validate_sites;
    json hd = json::array();
    for (const auto& dt : fold.held_dates) hd.push_back(dt.to_string());
    fj["held_dates"] = hd;
    fj["train_keys"] = keys_to_json(fold.train_keys);
    fj["validate_keys"] = keys_to_json(fold.validate_keys);
    arr.push_back(fj);
  }
  return j;
}

FoldPlan FoldPlan::from_json(const json& j) {
  FoldPlan plan;
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.k = j.at("k").get<int>();
  plan.train_sites = j.at("train_sites").get<std::vector<std::string>>();
  plan.test_sites = j.at("test_sites").get<std::vector<std::string>>();
  for (const auto& fj : j.at("folds")) {
    Fold fold;
    fold.validate_sites = fj.at("validate_sites").get<std::vector<std::string>>();
    for (const auto& s : fj.at("held_dates")) {
      fold.held_dates.push_back(Date::parse(s.get<std::string>()));
    }
    fold.train_keys = keys_from_json(fj.at("train_keys"));
    fold.validate_keys = keys_from_json(fj.at("validate_keys"));
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace linkvol::eval
