// Acceptance harness: thirteen pass/fail gates over the whole library, from
// closed-form metric identities up to the full synth -> report pipeline at
// 10,000 links x 90 days. Each criterion prints exactly one line; the process
// exits nonzero if any gate fails. Tolerances are pinned next to their checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "linkvol/cli/pipeline.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/common/rng.hpp"
#include "linkvol/data/loaders.hpp"
#include "linkvol/eval/benchmark.hpp"
#include "linkvol/eval/folds.hpp"
#include "linkvol/eval/metrics.hpp"
#include "linkvol/feat/featurize.hpp"
#include "linkvol/infer/infer.hpp"
#include "linkvol/model/boosting.hpp"
#include "linkvol/model/linear.hpp"
#include "linkvol/model/mlp.hpp"
#include "linkvol/model/train.hpp"
#include "linkvol/sel/lasso.hpp"
#include "linkvol/sel/standardize.hpp"
#include "linkvol/sel/vif.hpp"
#include "linkvol/synth/synth.hpp"

namespace fs = std::filesystem;
using namespace linkvol;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void need(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("linkvol_acceptance_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// (link, date-serial) -> third-party count, for joining official pairs.
std::map<std::pair<std::string, std::int64_t>, double> tp_index(const synth::WorldBundle& b) {
  std::map<std::pair<std::string, std::int64_t>, double> out;
  for (const auto& t : b.third_party) out[{t.link_id, t.date.serial()}] = t.count;
  return out;
}

feat::Sources sources_of(const synth::WorldBundle& b) {
  feat::Sources s;
  s.links = &b.links;
  s.zones = &b.zones;
  s.lgas = &b.lgas;
  s.station_obs = &b.station_obs;
  s.third_party = &b.third_party;
  s.counts = &b.counts;
  return s;
}

// ---------------------------------------------------------------------------
// 1. Planted-slope recovery on paired synthetic observations.

std::string criterion_1() {
  synth::SynthConfig c;
  c.n_links = 80;
  c.n_zones = 8;
  c.n_stations = 4;
  c.n_sites = 25;
  c.start_date = Date(2020, 1, 1);
  c.end_date = Date(2020, 2, 9);  // 40 days -> 25 x 40 = 1,000 pairs
  c.mode = data::Mode::cycle;
  c.planted_beta = 3.16;
  c.noise_sigma = 0.1;
  c.censor_threshold = 0.0;
  c.missing_obs_rate = 0.0;
  c.extreme_fraction = 0.0;
  c.seed = 4242;

  auto pairs_of = [](const synth::WorldBundle& b) {
    auto tp = tp_index(b);
    std::vector<double> t, y;
    for (const auto& obs : b.counts) {
      auto it = tp.find({obs.link_id, obs.date.serial()});
      if (it == tp.end()) continue;
      t.push_back(it->second);
      y.push_back(obs.observed_count);
    }
    return std::pair{Eigen::Map<Eigen::VectorXd>(t.data(), (Eigen::Index)t.size()).eval(),
                     Eigen::Map<Eigen::VectorXd>(y.data(), (Eigen::Index)y.size()).eval()};
  };

  auto noisy = synth::generate_world(c);
  auto [t1, y1] = pairs_of(noisy);
  need(t1.size() == 1000, "expected exactly 1,000 paired rows, got " + std::to_string(t1.size()));

  c.noise_sigma = 0.0;
  auto exact = synth::generate_world(c);
  auto [t2, y2] = pairs_of(exact);
  need(t2.size() == 1000, "noiseless world lost pairs");

  const auto t0 = Clock::now();
  const double beta_noisy = model::fit_naive_base(t1, y1);
  const double beta_exact = model::fit_naive_base(t2, y2);
  const double fit_s = seconds_since(t0);

  const double rel = std::abs(beta_noisy - 3.16) / 3.16;
  need(rel <= 0.05, "slope " + num(beta_noisy) + " misses 3.16 by " + num(rel * 100) + "%");
  need(std::abs(beta_exact - 3.16) <= 1e-9,
       "noiseless slope off by " + num(std::abs(beta_exact - 3.16)));
  need(fit_s < 1.0, "fit took " + num(fit_s) + " s, budget 1 s");

  return "planted slope 3.16 recovered: sigma=0.1 -> " + num(beta_noisy) + " (" +
         num(rel * 100) + "% err), sigma=0 -> " + num(std::abs(beta_exact - 3.16)) +
         " abs err, fit " + num(fit_s) + " s < 1 s";
}

// ---------------------------------------------------------------------------
// 2. Feature-using families beat the naive base on held-out spatial sites.

std::string criterion_2() {
  const auto t0 = Clock::now();

  synth::SynthConfig c;
  c.n_links = 10000;
  c.n_zones = 30;
  c.n_stations = 6;
  c.n_sites = 40;
  c.start_date = Date(2020, 1, 1);
  c.end_date = Date(2020, 3, 30);  // 90 days
  c.mode = data::Mode::walk;
  c.noise_sigma = 0.6;  // cripples the count-only predictor, not the features
  c.censor_threshold = 0.0;
  c.missing_obs_rate = 0.0;
  c.extreme_fraction = 0.0;
  c.site_selection = "uniform";
  c.feature_effect_weights = {{"population_density", 0.9}, {"poi_density", 0.7},
                              {"lum_entropy", 0.6},        {"avg_slope_pct", -0.6},
                              {"weekday", 0.5}};
  c.seed = 777;

  auto world = synth::generate_world(c);
  const std::vector<std::string> schema = {"third_party_count", "population_density",
                                           "poi_density",       "lum_entropy",
                                           "avg_slope_pct",     "weekday"};
  auto m = feat::build_training_matrix(sources_of(world), c.mode, schema);
  need(m.rows() == 3600, "expected 40 x 90 training rows, got " + std::to_string(m.rows()));

  auto plan = eval::make_fold_plan(m, 0.25, 3, c.seed);
  std::vector<model::ModelSpec> specs = {{"naive_base", {}}, {"gbrt", {}}, {"stacking", {}}};
  auto report = eval::benchmark(m, plan, specs, {c.seed, 3});

  std::map<std::string, double> r2;
  for (const auto& f : report.families) {
    need(!f.failed, f.label + " failed: " + f.error);
    r2[f.label] = f.testing.r2;
  }
  const double margin_gbrt = r2.at("gbrt") - r2.at("naive_base");
  const double margin_stack = r2.at("stacking") - r2.at("naive_base");
  need(margin_gbrt >= 0.05, "gbrt margin " + num(margin_gbrt) + " < 0.05 (naive " +
                                num(r2.at("naive_base")) + ", gbrt " + num(r2.at("gbrt")) + ")");
  need(margin_stack >= 0.05,
       "stacking margin " + num(margin_stack) + " < 0.05 (naive " + num(r2.at("naive_base")) +
           ", stacking " + num(r2.at("stacking")) + ")");

  const double total_s = seconds_since(t0);
  need(total_s < 120.0, "took " + num(total_s) + " s, budget 120 s");

  return "held-out R2 at 10,000 links x 90 days: naive " + num(r2.at("naive_base")) + ", gbrt +" +
         num(margin_gbrt) + ", stacking +" + num(margin_stack) + " (both >= 0.05), " +
         num(total_s) + " s < 120 s";
}

// ---------------------------------------------------------------------------
// 3. Coordinate-descent lasso against closed-form anchors.

std::string criterion_3() {
  // lambda = 0 equals least squares on full-rank standardized designs.
  for (int rep = 0; rep < 20; ++rep) {
    Rng r(900 + rep);
    const int n = 60, p = 5;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = r.normal();
      y(i) = 2.0 * X(i, 0) - 1.5 * X(i, 2) + 0.3 * r.normal();
    }
    auto scaler = sel::fit_scaler(X);
    Eigen::MatrixXd Xs = scaler.transform(X);
    Eigen::VectorXd yc = y.array() - y.mean();

    Eigen::VectorXd ols = (Xs.transpose() * Xs).ldlt().solve(Xs.transpose() * yc);
    auto fit = sel::lasso_fit(Xs, yc, 0.0);
    const double gap = (fit.beta - ols).cwiseAbs().maxCoeff();
    need(gap <= 1e-6, "lambda=0 vs OLS gap " + num(gap) + " on instance " + std::to_string(rep));

    // At and above lambda_max every coefficient is exactly zero; just below,
    // at least one coordinate activates.
    const double lmax = sel::lasso_lambda_max(Xs, yc);
    need(sel::lasso_fit(Xs, yc, lmax).beta.cwiseAbs().maxCoeff() == 0.0,
         "nonzero coefficient at lambda_max");
    need(sel::lasso_fit(Xs, yc, 1.3 * lmax).beta.cwiseAbs().maxCoeff() == 0.0,
         "nonzero coefficient above lambda_max");
    need(sel::lasso_fit(Xs, yc, 0.98 * lmax).beta.cwiseAbs().maxCoeff() > 0.0,
         "no active coordinate just below lambda_max");
  }

  // Objective trace never increases across sweeps.
  std::size_t sweeps = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng r(7000 + rep);
    const int n = 30 + (int)(r.uniform01() * 50);
    const int p = 3 + (int)(r.uniform01() * 8);
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = r.normal();
      y(i) = r.normal(0.0, 2.0);
    }
    auto scaler = sel::fit_scaler(X);
    Eigen::MatrixXd Xs = scaler.transform(X);
    Eigen::VectorXd yc = y.array() - y.mean();
    const double lambda = r.uniform(0.001, 0.5) * sel::lasso_lambda_max(Xs, yc);
    auto fit = sel::lasso_fit(Xs, yc, lambda);
    need(fit.objective_trace.size() >= 1, "empty objective trace");
    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s) {
      need(fit.objective_trace[s] <=
               fit.objective_trace[s - 1] + 1e-12 * (1.0 + std::abs(fit.objective_trace[s - 1])),
           "objective rose at sweep " + std::to_string(s) + " of instance " + std::to_string(rep));
    }
    sweeps += fit.objective_trace.size();
  }

  return "lambda=0 == OLS on 20 designs (<=1e-6), exact zeroing at lambda_max, objective "
         "non-increasing over " +
         std::to_string(sweeps) + " sweeps on 100 instances";
}

// ---------------------------------------------------------------------------
// 4. Variance inflation factors against the regress-each-column oracle.

std::string criterion_4() {
  // Orthogonal design: every VIF is 1.
  Eigen::MatrixXd W(8, 4);
  const int sign_rows[8][4] = {{+1, +1, +1, +1}, {+1, -1, +1, -1}, {+1, +1, -1, -1},
                               {+1, -1, -1, +1}, {-1, +1, +1, -1}, {-1, -1, +1, +1},
                               {-1, +1, -1, +1}, {-1, -1, -1, -1}};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j) W(i, j) = sign_rows[i][j];
  for (double v : sel::vif(W))
    need(std::abs(v - 1.0) <= 1e-6, "orthogonal design VIF " + num(v) + " != 1");

  // Random correlated designs vs the definitional two-step oracle.
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    Rng r(4100 + rep);
    const int n = 40, p = 4;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i) {
      const double shared = r.normal();
      for (int j = 0; j < p; ++j) X(i, j) = r.normal() + 0.8 * shared;
    }
    auto v = sel::vif(X);
    for (int j = 0; j < p; ++j) {
      Eigen::MatrixXd D(n, p);  // intercept + the other columns
      D.col(0).setOnes();
      int k = 1;
      for (int q = 0; q < p; ++q)
        if (q != j) D.col(k++) = X.col(q);
      Eigen::VectorXd target = X.col(j);
      Eigen::VectorXd coef = D.colPivHouseholderQr().solve(target);
      const double ss_res = (target - D * coef).squaredNorm();
      const double ss_tot = (target.array() - target.mean()).square().sum();
      const double oracle = 1.0 / (1.0 - (1.0 - ss_res / ss_tot));
      worst = std::max(worst, std::abs(v[j] - oracle));
      need(std::abs(v[j] - oracle) <= 1e-6, "VIF " + num(v[j]) + " vs oracle " + num(oracle) +
                                                " on instance " + std::to_string(rep));
    }
  }

  // A duplicated column is perfectly explained: infinite marker.
  Eigen::MatrixXd dup(20, 3);
  Rng r(5);
  for (int i = 0; i < 20; ++i) {
    dup(i, 0) = r.normal();
    dup(i, 1) = r.normal();
    dup(i, 2) = dup(i, 0);
  }
  auto vd = sel::vif(dup);
  need(std::isinf(vd[0]) && std::isinf(vd[2]), "duplicated column not marked infinite");
  need(!std::isinf(vd[1]), "independent column marked infinite");

  return "orthogonal design -> 1 +- 1e-6, 200 column oracles within " + num(worst) +
         ", duplicate column -> +inf marker";
}

// ---------------------------------------------------------------------------
// 5. Elbow rank equals the brute-force max-chord-distance oracle.

std::string criterion_5() {
  for (int rep = 0; rep < 100; ++rep) {
    Rng r(3200 + rep);
    const int n = 10 + (int)(r.uniform01() * 51);
    const double amp = r.uniform(1.0, 100.0);
    const double rate = r.uniform(0.05, 0.5);
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) values[i] = amp * std::exp(-rate * i);

    // Oracle: descending sort, normalize both axes, perpendicular distance to
    // the (0,1)-(1,0) chord, first argmax.
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double top = sorted.front(), bottom = sorted.back();
    std::size_t best_rank = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double xs = (double)i / (n - 1);
      const double ys = (sorted[i] - bottom) / (top - bottom);
      const double dist = std::abs(xs + ys - 1.0) / std::sqrt(2.0);
      if (dist > best) {
        best = dist;
        best_rank = (std::size_t)i;
      }
    }

    std::vector<double> shuffled = values;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[r.u64() % i]);
    auto k = infer::kneedle_elbow(shuffled);
    need(k.has_knee, "no knee on convex curve " + std::to_string(rep));
    need(k.rank == best_rank, "rank " + std::to_string(k.rank) + " vs oracle " +
                                  std::to_string(best_rank) + " on curve " + std::to_string(rep));
    need(k.elbow == sorted[best_rank], "elbow value mismatch on curve " + std::to_string(rep));
  }

  // Straight lines carry no knee; degenerate inputs throw.
  for (int n : {5, 7, 12}) {
    std::vector<double> line(n);
    for (int i = 0; i < n; ++i) line[i] = 10.0 - 1.5 * i;
    need(!infer::kneedle_elbow(line).has_knee,
         "knee reported on a straight line of " + std::to_string(n));
  }
  bool threw = false;
  try {
    infer::kneedle_elbow({5.0, 5.0, 5.0, 5.0});
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  need(threw, "constant curve did not throw");

  return "rank == max-chord-distance oracle on 100 random convex curves, straight lines -> no "
         "knee";
}

// ---------------------------------------------------------------------------
// 6. Metric identities and the worked error example.

std::string criterion_6() {
  Eigen::VectorXd y(4);
  y << 2.0, 4.0, 6.0, 8.0;
  Eigen::VectorXd mean_pred = Eigen::VectorXd::Constant(4, y.mean());
  need(std::abs(eval::r2(y, mean_pred)) <= 1e-12, "r2(mean predictor) != 0");
  need(eval::r2(y, y) == 1.0, "r2(perfect predictor) != 1");

  Eigen::VectorXd t3(3), p3(3);
  t3 << 1, 2, 3;
  p3 << 3, 2, 1;
  need(eval::r2(t3, p3) == -3.0, "r2([1,2,3],[3,2,1]) != -3");

  Eigen::VectorXd t2(2), p2(2);
  t2 << 0, 0;
  p2 << 3, 4;
  need(eval::mae(t2, p2) == 3.5, "mae != 3.5 exactly");
  need(eval::rmse(t2, p2) == std::sqrt(12.5), "rmse != sqrt(12.5) exactly");

  for (int rep = 0; rep < 1000; ++rep) {
    Rng r(60000 + rep);
    const int n = 2 + (int)(r.uniform01() * 39);
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a(i) = r.uniform(-50.0, 50.0);
      b(i) = r.uniform(-50.0, 50.0);
    }
    need(eval::rmse(a, b) >= eval::mae(a, b) - 1e-12,
         "rmse < mae on random pair " + std::to_string(rep));
  }

  return "r2 identities (0 / 1 / -3) exact, mae=3.5 rmse=sqrt(12.5) exact, rmse >= mae on 1,000 "
         "random pairs";
}

// ---------------------------------------------------------------------------
// 7. Split and fold hygiene, mechanically audited.

std::string criterion_7() {
  std::vector<std::string> sites;
  for (int i = 0; i < 50; ++i) sites.push_back("s" + std::to_string(100 + i));

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto [train, test] = eval::spatial_split(sites, 0.25, seed);
    need(!train.empty() && !test.empty(), "empty split side at seed " + std::to_string(seed));
    need(train.size() + test.size() == sites.size(), "split dropped a site");
    std::vector<std::string> overlap;
    std::set_intersection(train.begin(), train.end(), test.begin(), test.end(),
                          std::back_inserter(overlap));
    need(overlap.empty(), "site on both sides at seed " + std::to_string(seed));
  }

  // Fold plans: validation sets partition the rows; no fold trains on its
  // own validation sites or held dates.
  std::vector<eval::SiteDateKey> rows;
  for (int s = 0; s < 20; ++s)
    for (int t = 0; t < 12; ++t)
      rows.push_back({"s" + std::to_string(s), Date(2020, 3, 1) + t});
  std::set<std::pair<std::string, std::int64_t>> all_rows;
  for (const auto& [site, d] : rows) all_rows.insert({site, d.serial()});

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto folds = eval::spatio_temporal_folds(rows, 4, seed);
    std::set<std::pair<std::string, std::int64_t>> seen;
    for (const auto& f : folds) {
      std::set<std::string> va_sites(f.validate_sites.begin(), f.validate_sites.end());
      std::set<std::int64_t> held;
      for (const auto& d : f.held_dates) held.insert(d.serial());
      for (const auto& [site, d] : f.validate_keys) {
        need(seen.insert({site, d.serial()}).second, "validation row repeated across folds");
      }
      for (const auto& [site, d] : f.train_keys) {
        need(!va_sites.count(site), "fold trains on a validation site");
        need(!held.count(d.serial()), "fold trains inside its held date block");
      }
    }
    need(seen == all_rows, "validation sets fail to partition rows at seed " +
                               std::to_string(seed));
  }

  // Provenance records let fit/score disjointness be checked mechanically.
  synth::SynthConfig c;
  c.n_links = 50;
  c.n_zones = 6;
  c.n_stations = 4;
  c.n_sites = 12;
  c.start_date = Date(2020, 2, 1);
  c.end_date = Date(2020, 2, 29);
  c.seed = 13;
  auto world = synth::generate_world(c);
  auto m = feat::build_training_matrix(
      sources_of(world), c.mode, {"third_party_count", "population_density", "weekday"});
  auto plan = eval::make_fold_plan(m, 0.25, 3, 13);
  plan.check();
  auto report = eval::benchmark(m, plan, {{"ols", {}}}, {13, 1});
  auto prov = report.provenance();

  auto key_set = [&](const std::string& ref) {
    std::set<std::pair<std::string, std::int64_t>> out;
    auto from_json_keys = [&](const nlohmann::json& arr) {
      for (const auto& k : arr) out.insert({k[0].get<std::string>(), Date::parse(k[1].get<std::string>()).serial()});
    };
    if (ref == "train_keys") from_json_keys(prov["train_keys"]);
    else if (ref == "test_keys") from_json_keys(prov["test_keys"]);
    else {
      const auto open = ref.find('[');
      const std::size_t idx = (std::size_t)std::stoi(ref.substr(open + 1));
      const std::string leaf = ref.substr(ref.find("].") + 2);
      from_json_keys(prov["plan"]["folds"][idx][leaf]);
    }
    return out;
  };

  std::size_t audited = 0;
  for (const auto& fam : prov["families"]) {
    for (const auto& phase : fam["phases"]) {
      auto fit = key_set(phase["fit_keys"].get<std::string>());
      auto score = key_set(phase["scored_keys"].get<std::string>());
      if (phase["phase"] == "training") {
        need(fit == score, "training phase fit/score differ");
      } else {
        std::vector<std::pair<std::string, std::int64_t>> inter;
        std::set_intersection(fit.begin(), fit.end(), score.begin(), score.end(),
                              std::back_inserter(inter));
        need(inter.empty(), "fit/score rows overlap in a " +
                                phase["phase"].get<std::string>() + " phase");
        ++audited;
      }
    }
  }
  need(audited == (std::size_t)plan.k + 1, "expected k+1 disjoint phases, audited " +
                                               std::to_string(audited));

  return "1,000 seeded splits site-disjoint, 1,000 fold plans partition cleanly, provenance "
         "audit: " +
         std::to_string(audited) + " fit/score phases disjoint";
}

// ---------------------------------------------------------------------------
// 8. Network gradient vs central finite differences.

std::string criterion_8() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng r(800 + seed);
    const int n = 12, p = 4;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = r.normal();
      y(i) = r.normal(0.0, 2.0);
    }
    model::Mlp net;
    net.init(p, {8, 5}, seed);
    Eigen::VectorXd theta = net.get_params();
    Eigen::VectorXd g = net.gradient(X, y);

    for (int probe = 0; probe < 5; ++probe) {
      const Eigen::Index i = (Eigen::Index)(r.u64() % (std::uint64_t)theta.size());
      const double h = 1e-6 * std::max(1.0, std::abs(theta(i)));
      Eigen::VectorXd tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      net.set_params(tp);
      const double lp = net.loss(X, y);
      net.set_params(tm);
      const double lm = net.loss(X, y);
      net.set_params(theta);
      const double fd = (lp - lm) / (2.0 * h);
      const double rel = std::abs(g(i) - fd) / std::max({std::abs(g(i)), std::abs(fd), 1e-4});
      worst = std::max(worst, rel);
      need(rel < 1e-4, "gradient rel err " + num(rel) + " at seed " + std::to_string(seed) +
                           " param " + std::to_string((long long)i));
    }
  }
  return "analytic gradient vs central differences: 50 probes, worst rel err " + num(worst) +
         " < 1e-4";
}

// ---------------------------------------------------------------------------
// 9. Ensemble contracts: boosting traces, halting, leakage, exact averaging.

std::string criterion_9() {
  Rng r(90);
  const int n = 300, p = 3;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = r.normal();
    y(i) = std::sin(X(i, 0)) + 0.5 * X(i, 1) * X(i, 1) + 0.2 * r.normal();
  }

  model::Gbrt g;
  model::GbrtConfig gc;  // 300 stages by default
  g.fit(X, y, gc);
  need(g.stage_mse().size() == 300, "expected 300 staged MSE values");
  for (std::size_t s = 1; s < g.stage_mse().size(); ++s)
    need(g.stage_mse()[s] <= g.stage_mse()[s - 1] + 1e-12 * (1.0 + g.stage_mse()[s - 1]),
         "training MSE rose at stage " + std::to_string(s));

  // Weight resampling concentrates on inseparable twins until the average
  // loss crosses 1/2 and fitting halts, discarding the crossing stage.
  Eigen::MatrixXd Xm(100, 1);
  Eigen::VectorXd ym(100);
  for (int i = 0; i < 80; ++i) {
    Xm(i, 0) = i;
    ym(i) = i < 40 ? 0.0 : 10.0;
  }
  for (int j = 0; j < 10; ++j) {
    Xm(80 + 2 * j, 0) = 200 + j;
    Xm(81 + 2 * j, 0) = 200 + j;
    ym(80 + 2 * j) = 1000.0;
    ym(81 + 2 * j) = -1000.0;
  }
  model::AdaBoostR2 ada;
  model::AdaBoostR2Config ac;
  ac.n_stages = 25;
  ac.max_depth = 3;
  ac.min_samples_leaf = 1;
  ada.fit(Xm, ym, ac, 5);
  need(ada.stopped_early(), "average loss never crossed 1/2");
  need(ada.stage_count() >= 1 && ada.stage_count() < 25, "unexpected stage count");
  for (double l : ada.stage_avg_losses()) need(l < 0.5, "kept a stage at average loss >= 0.5");

  // Stacking: the meta-learner sees only out-of-fold predictions.
  Eigen::MatrixXd Xs(150, 4);
  Eigen::VectorXd ys(150);
  Rng rs(91);
  for (int i = 0; i < 150; ++i) {
    for (int j = 0; j < 4; ++j) Xs(i, j) = rs.normal();
    ys(i) = 3.0 * Xs(i, 0) - 2.0 * Xs(i, 1) + 0.5 * rs.normal();
  }
  nlohmann::json resolved, diag;
  auto stack = model::train_learner(Xs, ys, {"stacking", {}}, 11, 1, &resolved, &diag);
  need(diag.at("leakage_violations").get<int>() == 0, "meta-feature rows leaked");
  const auto& fold_of = diag.at("fold_of");
  need((int)fold_of.size() == 150, "fold bookkeeping incomplete");
  const int k_inner = resolved.at("k_inner").get<int>();
  std::vector<int> counts_per_fold(k_inner, 0);
  for (const auto& f : fold_of) ++counts_per_fold.at(f.get<int>());
  for (int cnt : counts_per_fold)
    need(cnt == 150 / k_inner || cnt == 150 / k_inner + 1, "unbalanced inner folds");

  // Voting equals the mean of the members' own prediction dumps, bitwise.
  nlohmann::json vres;
  auto voter = model::train_learner(Xs, ys, {"voting", {}}, 21, 1, &vres);
  Eigen::VectorXd combined = voter->predict(Xs);

  std::vector<std::string> dumps;
  const auto& members = vres.at("members");
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto spec = model::ModelSpec::from_json(members[i]);
    auto member = model::train_learner(Xs, ys, spec, derive_seed(21, i), 1);
    Eigen::VectorXd pred = member->predict(Xs);
    std::ostringstream csv;
    csv << "pred\n";
    for (Eigen::Index row = 0; row < pred.size(); ++row)
      csv << fmt_double(pred(row)) << "\n";
    dumps.push_back(csv.str());
  }
  Eigen::VectorXd external = Eigen::VectorXd::Zero(150);
  for (const auto& dump : dumps) {
    std::istringstream in(dump);
    std::string line;
    std::getline(in, line);  // header
    Eigen::VectorXd pred(150);
    for (Eigen::Index row = 0; row < 150; ++row) {
      std::getline(in, line);
      pred(row) = std::stod(line);
    }
    external += pred;
  }
  external /= (double)dumps.size();
  need((combined - external).cwiseAbs().maxCoeff() == 0.0,
       "voting diverges from the external mean of member dumps");

  return "gbrt MSE non-increasing over 300 stages, adaboost halts at avg loss >= 1/2, stacking "
         "leaked 0 rows across " +
         std::to_string(k_inner) + " inner folds, voting == member-dump mean bitwise";
}

// ---------------------------------------------------------------------------
// 10. Trip conversion worked examples and rollup consistency.

std::string criterion_10() {
  auto one_row = [](double estimate) {
    infer::InferenceResult res;
    res.link_id = "L1";
    res.date = Date(2020, 3, 2);
    res.estimate = estimate;
    res.mitigated_estimate = estimate;
    return std::vector<infer::InferenceResult>{res};
  };

  // 100 pedestrians on a 500 m link, d=1 km, gamma=0.5: 50 km -> 25 trips.
  auto walk = infer::aggregate_trips(one_row(100.0), {{"L1", 0.5}}, {1.0, 0.5});
  need(walk.km == 50.0 && walk.trips == 25.0, "walking example off: " + num(walk.km) + " km, " +
                                                  num(walk.trips) + " trips");
  // 10 cyclists on a 4.7 km link, d=4.7 km, gamma=1: 47 km -> 10 trips.
  auto cycle = infer::aggregate_trips(one_row(10.0), {{"L1", 4.7}}, {4.7, 1.0});
  need(cycle.km == 47.0 && cycle.trips == 10.0, "cycling example off: " + num(cycle.km) +
                                                    " km, " + num(cycle.trips) + " trips");

  auto dw = infer::default_aggregation_params(data::Mode::walk);
  auto dc = infer::default_aggregation_params(data::Mode::cycle);
  need(dw.d == 1.0 && dw.gamma == 0.5 && dc.d == 4.7 && dc.gamma == 1.0,
       "mode defaults drifted");

  // Regional rollups repartition the network totals.
  double worst = 0.0;
  const char* lga_pool[] = {"A", "B", "C", "D", ""};
  for (int rep = 0; rep < 20; ++rep) {
    Rng r(1500 + rep);
    std::vector<data::LinkRecord> links(60);
    std::map<std::string, double> lengths;
    std::vector<infer::InferenceResult> results;
    for (int i = 0; i < 60; ++i) {
      auto& l = links[i];
      l.link_id = "L" + std::to_string(i);
      l.length_m = r.uniform(100.0, 3000.0);
      l.lga_id = lga_pool[r.u64() % 5];
      lengths[l.link_id] = l.length_m / 1000.0;
      for (int t = 0; t < 3; ++t) {
        infer::InferenceResult res;
        res.link_id = l.link_id;
        res.date = Date(2020, 3, 2) + t;
        res.estimate = r.uniform(0.0, 500.0);
        res.mitigated_estimate = res.estimate;
        results.push_back(res);
      }
    }
    infer::AggregationParams params{1.0, 0.5};
    auto net = infer::aggregate_trips(results, lengths, params);
    auto by_lga = infer::rollup_by_lga(results, links, params);
    double km = 0.0, trips = 0.0;
    for (const auto& [lga, tot] : by_lga) {
      km += tot.km;
      trips += tot.trips;
    }
    const double km_err = std::abs(km - net.km) / std::max(1.0, std::abs(net.km));
    const double trip_err = std::abs(trips - net.trips) / std::max(1.0, std::abs(net.trips));
    worst = std::max({worst, km_err, trip_err});
    need(km_err <= 1e-6 && trip_err <= 1e-6,
         "rollup diverges from network totals on assignment " + std::to_string(rep));
  }

  return "100 x 0.5 km @ d=1,g=0.5 -> 25 trips exact; 10 x 4.7 km @ d=4.7,g=1 -> 10 trips "
         "exact; 20 rollups within " +
         num(worst) + " relative";
}

// ---------------------------------------------------------------------------
// 11. Outlier mitigation on a world with planted extreme links.

std::string criterion_11() {
  synth::SynthConfig c;
  c.n_links = 600;
  c.n_zones = 16;
  c.n_stations = 4;
  c.n_sites = 50;
  c.start_date = Date(2020, 2, 1);
  c.end_date = Date(2020, 3, 16);  // 45 days
  c.noise_sigma = 0.15;
  c.extreme_fraction = 0.10;
  c.seed = 99;

  auto world = synth::generate_world(c);
  const std::vector<std::string> schema = {"third_party_count", "population_density",
                                           "poi_density",       "lum_entropy",
                                           "avg_slope_pct",     "precip_mm",
                                           "tmax_c",            "weekday"};
  auto train = feat::build_training_matrix(sources_of(world), c.mode, schema);
  auto trained = model::train_model(train, {"stacking", {}}, c.seed, 3);

  auto inference = feat::build_inference_matrix(sources_of(world), c.mode, schema);
  auto results = infer::predict_network(trained, inference, nullptr, 3);

  std::vector<double> ratios;
  for (const auto& res : results)
    if (res.ratio) ratios.push_back(*res.ratio);
  auto elbow = infer::kneedle_elbow(ratios);
  need(elbow.has_knee, "ratio distribution produced no elbow");

  const auto before = results;
  auto rep = infer::mitigate(results, elbow.elbow, infer::MitigationStrategy::cap);

  std::set<std::string> flagged_links;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& now = results[i];
    need(now.mitigated_estimate <= now.estimate, "mitigation raised an estimate");
    if (now.outlier) {
      flagged_links.insert(now.link_id);
    } else {
      const auto& was = before[i];
      need(now.estimate == was.estimate && now.mitigated_estimate == was.estimate &&
               now.base_count == was.base_count && now.ratio == was.ratio,
           "a non-flagged row changed");
    }
  }
  const double frac = (double)flagged_links.size() / c.n_links;
  need(frac >= 0.05 && frac <= 0.20, "flagged " + num(frac * 100) + "% of links, outside "
                                     "[5%, 20%]");
  need(rep.flagged + rep.unchanged == results.size(), "mitigation report rows off");

  return "cap strategy flagged " + std::to_string(flagged_links.size()) + "/600 links (" +
         num(frac * 100) + "%), never raised an estimate, non-flagged rows bit-identical";
}

// ---------------------------------------------------------------------------
// 12. Determinism across thread counts and serialization round trips.

std::string criterion_12() {
  synth::SynthConfig c;
  c.n_links = 60;
  c.n_zones = 8;
  c.n_stations = 4;
  c.n_sites = 20;
  c.start_date = Date(2020, 2, 1);
  c.end_date = Date(2020, 3, 1);
  c.seed = 31;
  auto world = synth::generate_world(c);
  const std::vector<std::string> schema = {"third_party_count", "population_density",
                                           "poi_density",       "lum_entropy",
                                           "avg_slope_pct",     "precip_mm",
                                           "tmax_c",            "weekday"};
  auto m = feat::build_training_matrix(sources_of(world), c.mode, schema);
  auto plan = eval::make_fold_plan(m, 0.2, 3, c.seed);

  std::vector<model::ModelSpec> specs;
  for (const auto& fam : model::model_families()) specs.push_back({fam, {}});

  auto r1 = eval::benchmark(m, plan, specs, {c.seed, 1});
  auto r8 = eval::benchmark(m, plan, specs, {c.seed, 8});
  need(r1.metrics_csv() == r8.metrics_csv(), "metrics differ across thread counts");
  need(r1.test_predictions_csv() == r8.test_predictions_csv(),
       "test predictions differ across thread counts");
  need(r1.cv_predictions_csv() == r8.cv_predictions_csv(),
       "fold predictions differ across thread counts");
  need(r1.provenance().dump() == r8.provenance().dump(),
       "provenance differs across thread counts");
  for (const auto& f : r1.families) need(!f.failed, f.label + " failed: " + f.error);

  // Every family reloads from its serialized form to bit-identical output.
  for (const auto& fam : model::model_families()) {
    auto trained = model::train_model(m, {fam, {}}, 7, 2);
    const std::string bytes = trained.to_json();
    auto reloaded = model::TrainedModel::from_json(bytes);
    need((trained.predict(m) - reloaded.predict(m)).cwiseAbs().maxCoeff() == 0.0,
         fam + " predictions changed across a serialize/reload");
    need(reloaded.to_json() == bytes, fam + " re-serialization not stable");
  }
  auto dir = fresh_dir("roundtrip");
  auto stack = model::train_model(m, {"stacking", {}}, 7, 2);
  stack.save((dir / "model.json").string());
  auto loaded = model::TrainedModel::load((dir / "model.json").string());
  need((stack.predict(m) - loaded.predict(m)).cwiseAbs().maxCoeff() == 0.0,
       "file round trip changed stacking predictions");

  // Written bundles come back through the standard loaders, nothing rejected.
  auto bundle_dir = fresh_dir("bundle");
  synth::write_bundle(world, bundle_dir.string());
  const std::string base = bundle_dir.string();
  data::LoadReport obs_rep, count_rep;
  auto links = data::load_links(base + "/links.geojson", c.mode);
  auto zones = data::load_zones(base + "/zones.csv");
  auto lgas = data::load_lgas(base + "/lgas.csv");
  auto sites = data::load_station_sites(base + "/station_sites.csv");
  auto obs = data::load_station_obs(base + "/station_obs.csv", sites, &obs_rep);
  auto counts = data::load_counts(base + "/counts.csv", c.mode, &count_rep);
  auto third = data::load_third_party(base + "/third_party.csv", c.mode);
  need(links.size() == world.links.size() && zones.size() == world.zones.size() &&
           lgas.size() == world.lgas.size() && sites.size() == world.stations.size() &&
           obs.size() == world.station_obs.size() && counts.size() == world.counts.size() &&
           third.size() == world.third_party.size(),
       "loader round trip changed a table size");
  need(obs_rep.rejected.empty() && count_rep.rejected.empty(),
       "loaders rejected rows from a written bundle");

  fs::remove_all(dir);
  fs::remove_all(bundle_dir);
  return "benchmark bytes identical at 1 vs 8 threads across " +
         std::to_string(specs.size()) + " families, all families reload bit-identically, "
         "bundle round-trips the loaders";
}

// ---------------------------------------------------------------------------
// 13. Full pipeline, synth through report, inside the wall-clock budget.

std::string criterion_13() {
  const auto t0 = Clock::now();
  auto out = fresh_dir("e2e");

  cli::RunConfig c;
  c.out_dir = out.string();
  c.seed = 2026;
  c.seed_set = true;
  c.threads = 3;
  c.k_folds = 5;
  c.synth.n_links = 10000;
  c.synth.n_zones = 30;
  c.synth.n_stations = 6;
  c.synth.n_sites = 40;
  c.synth.start_date = Date(2020, 1, 1);
  c.synth.end_date = Date(2020, 3, 30);  // 90 days
  c.validate();

  cli::Pipeline pipeline(c);
  auto stages = pipeline.run_all();
  need(stages.size() == cli::stage_names().size(), "stage count off");
  for (const auto& s : stages) need(!s.skipped, s.stage + " skipped on a fresh run");

  for (const std::string rel :
       {"models/model.json", "reports/benchmark_metrics.csv", "infer/results.csv",
        "reports/aggregation.json", "reports/summary.json", "reports/oracle_report.json"}) {
    need(fs::exists(out / rel), "missing artifact " + rel);
  }
  const auto oracle = nlohmann::json::parse(read_file_bytes(
      (out / "reports/oracle_report.json").string()));
  const double beta_err = oracle.at("beta_recovery_rel_error").get<double>();
  const double link_r2 = oracle.at("link_r2").get<double>();
  need(beta_err < 0.25, "base slope recovery err " + num(beta_err));
  need(link_r2 > 0.0, "link-level R2 " + num(link_r2) + " not positive");

  const double total_s = seconds_since(t0);
  need(total_s < 600.0, "took " + num(total_s) + " s, budget 600 s");

  const double n_rows = oracle.at("rows").get<double>();
  fs::remove_all(out);
  return "synth -> report at 10,000 links x 90 days, all families, " + num(total_s) +
         " s < 600 s (" + num(n_rows) + " scored rows, slope err " + num(beta_err) +
         ", link R2 " + num(link_r2) + ")";
}

}  // namespace

int main() {
  struct Gate {
    int id;
    std::function<std::string()> run;
  };
  const std::vector<Gate> gates = {
      {1, criterion_1},  {2, criterion_2},  {3, criterion_3},  {4, criterion_4},
      {5, criterion_5},  {6, criterion_6},  {7, criterion_7},  {8, criterion_8},
      {9, criterion_9},  {10, criterion_10}, {11, criterion_11}, {12, criterion_12},
      {13, criterion_13},
  };

  int failures = 0;
  for (const auto& gate : gates) {
    std::string detail;
    bool ok = true;
    try {
      detail = gate.run();
    } catch (const std::exception& ex) {
      ok = false;
      detail = ex.what();
    }
    std::printf("criterion %2d: %s — %s\n", gate.id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures > 0) std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
