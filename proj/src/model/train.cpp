#include "linkvol/model/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "linkvol/common/parallel.hpp"
#include "linkvol/common/rng.hpp"
#include "linkvol/model/boosting.hpp"
#include "linkvol/model/forest.hpp"
#include "linkvol/model/gnb.hpp"
#include "linkvol/model/linear.hpp"
#include "linkvol/model/mlp.hpp"
#include "linkvol/model/svr.hpp"
#include "linkvol/model/tree.hpp"
#include "linkvol/sel/standardize.hpp"

namespace linkvol::model {

namespace {

using nlohmann::json;

double jnum(const json& j, const char* key, double def) {
  return j.contains(key) ? j.at(key).get<double>() : def;
}

int jint(const json& j, const char* key, int def) {
  return j.contains(key) ? j.at(key).get<int>() : def;
}

bool jbool(const json& j, const char* key, bool def) {
  return j.contains(key) ? j.at(key).get<bool>() : def;
}

json scaler_to_json(const sel::Scaler& s) {
  json j;
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  j["scale"] = std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size());
  j["constant"] = std::vector<int>(s.constant.begin(), s.constant.end());
  return j;
}

sel::Scaler scaler_from_json(const json& j) {
  sel::Scaler s;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto scale = j.at("scale").get<std::vector<double>>();
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.scale =
      Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  const auto c = j.at("constant").get<std::vector<int>>();
  s.constant.assign(c.begin(), c.end());
  return s;
}

// ---- family adapters -------------------------------------------------------

struct OlsLearner final : Learner {
  OlsModel m;
  std::string family() const override { return "ols"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct NaiveBaseLearner final : Learner {
  NaiveBaseModel m;
  std::string family() const override { return "naive_base"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct LassoLearner final : Learner {
  LassoModel m;
  std::string family() const override { return "lasso"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct CartLearner final : Learner {
  RegressionTree m;
  std::string family() const override { return "cart"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct ForestLearner final : Learner {
  RandomForest m;
  std::string family() const override { return "random_forest"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct GbrtLearner final : Learner {
  Gbrt m;
  std::string family() const override { return "gbrt"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct AdaLearner final : Learner {
  AdaBoostR2 m;
  std::string family() const override { return "adaboost_r2"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

// MLP and SVR consume standardized inputs; the adapter owns the scalers so
// callers always see raw features and raw-unit predictions.
struct MlpLearner final : Learner {
  sel::Scaler sx;
  double y_mean = 0.0;
  double y_scale = 1.0;
  Mlp net;
  std::string family() const override { return "mlp"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    return (net.predict(sx.transform(X)).array() * y_scale + y_mean).matrix();
  }
  json params_json() const override {
    json j;
    j["x_scaler"] = scaler_to_json(sx);
    j["y_mean"] = y_mean;
    j["y_scale"] = y_scale;
    j["net"] = net.to_json();
    return j;
  }
};

struct SvrLearner final : Learner {
  sel::Scaler sx;
  double y_mean = 0.0;
  double y_scale = 1.0;
  LinearSvr m;
  std::string family() const override { return "linear_svr"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    return (m.predict(sx.transform(X)).array() * y_scale + y_mean).matrix();
  }
  json params_json() const override {
    json j;
    j["x_scaler"] = scaler_to_json(sx);
    j["y_mean"] = y_mean;
    j["y_scale"] = y_scale;
    j["svr"] = m.to_json();
    return j;
  }
};

struct GnbLearner final : Learner {
  GnbBinned m;
  std::string family() const override { return "gnb_binned"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override { return m.predict(X); }
  json params_json() const override { return m.to_json(); }
};

struct VotingLearner final : Learner {
  std::vector<std::unique_ptr<Learner>> members;
  std::string family() const override { return "voting"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& m : members) out += m->predict(X);
    return out / static_cast<double>(members.size());
  }
  json params_json() const override {
    json j;
    auto& arr = j["members"] = json::array();
    for (const auto& m : members) {
      arr.push_back({{"family", m->family()}, {"params", m->params_json()}});
    }
    return j;
  }
};

struct StackingLearner final : Learner {
  std::vector<std::unique_ptr<Learner>> bases;
  OlsModel meta;
  std::string family() const override { return "stacking"; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override {
    Eigen::MatrixXd meta_X(X.rows(), static_cast<Eigen::Index>(bases.size()));
    for (std::size_t b = 0; b < bases.size(); ++b) {
      meta_X.col(static_cast<Eigen::Index>(b)) = bases[b]->predict(X);
    }
    return meta.predict(meta_X);
  }
  json params_json() const override {
    json j;
    auto& arr = j["bases"] = json::array();
    for (const auto& b : bases) {
      arr.push_back({{"family", b->family()}, {"params", b->params_json()}});
    }
    j["meta"] = meta.to_json();
    return j;
  }
};

// ---- spec resolution -------------------------------------------------------

std::vector<ModelSpec> member_specs(const json& params, const char* key,
                                    const std::vector<ModelSpec>& defaults) {
  if (!params.contains(key)) return defaults;
  std::vector<ModelSpec> out;
  for (const auto& mj : params.at(key)) out.push_back(ModelSpec::from_json(mj));
  return out;
}

// Ensemble-internal defaults are lighter than the standalone family defaults
// so the default voting/stacking configurations stay tractable; all resolved
// values land in the recorded config.
std::vector<ModelSpec> default_voting_members() {
  return {
      {"ols", json::object()},
      {"mlp", json::object()},
      {"random_forest", json{{"n_trees", 100}, {"max_depth", 10}}},
  };
}

std::vector<ModelSpec> default_stacking_bases() {
  return {
      {"ols", json::object()},
      {"random_forest", json{{"n_trees", 100}, {"max_depth", 10}}},
      {"gbrt", json{{"n_stages", 150}}},
      {"adaboost_r2", json{{"n_stages", 50}}},
  };
}

std::unique_ptr<Learner> train_voting(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const json& params, std::uint64_t seed, int threads,
                                      json* resolved, json* diagnostics);

std::unique_ptr<Learner> train_stacking(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const json& params, std::uint64_t seed, int threads,
                                        json* resolved, json* diagnostics);

}  // namespace

const std::vector<std::string>& model_families() {
  static const std::vector<std::string> families = {
      "naive_base", "ols",  "lasso",      "cart",       "random_forest", "gbrt",
      "adaboost_r2", "mlp", "linear_svr", "gnb_binned", "voting",        "stacking",
  };
  return families;
}

json ModelSpec::to_json() const { return {{"family", family}, {"params", params}}; }

ModelSpec ModelSpec::from_json(const json& j) {
  ModelSpec s;
  s.family = j.at("family").get<std::string>();
  s.params = j.contains("params") ? j.at("params") : json::object();
  return s;
}

std::unique_ptr<Learner> train_learner(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       const ModelSpec& spec, std::uint64_t seed, int threads,
                                       json* resolved, json* diagnostics) {
  if (X.rows() != y.size()) throw std::invalid_argument("train: X/y row mismatch");
  if (X.rows() == 0) throw std::invalid_argument("train: no training rows");
  const json& P = spec.params;
  json res;  // resolved config, populated per family
  json diag = json::object();

  std::unique_ptr<Learner> out;
  if (spec.family == "ols") {
    auto l = std::make_unique<OlsLearner>();
    const bool with_intercept = jbool(P, "with_intercept", true);
    l->m.fit(X, y, with_intercept);
    res = {{"with_intercept", with_intercept}};
    out = std::move(l);
  } else if (spec.family == "naive_base") {
    auto l = std::make_unique<NaiveBaseLearner>();
    const auto col = static_cast<Eigen::Index>(jint(P, "feature_col", 0));
    const bool with_intercept = jbool(P, "with_intercept", false);
    l->m.fit(X, y, col, with_intercept);
    res = {{"feature_col", col}, {"with_intercept", with_intercept}};
    diag["beta"] = l->m.beta();
    out = std::move(l);
  } else if (spec.family == "lasso") {
    auto l = std::make_unique<LassoLearner>();
    LassoModel::Options opts;
    opts.k_folds = jint(P, "k_folds", 5);
    opts.grid_points = jint(P, "grid_points", 50);
    opts.decades = jnum(P, "decades", 4.0);
    opts.lambda = jnum(P, "lambda", -1.0);
    l->m.fit(X, y, opts, seed);
    res = {{"k_folds", opts.k_folds},
           {"grid_points", opts.grid_points},
           {"decades", opts.decades},
           {"lambda", l->m.lambda()}};
    out = std::move(l);
  } else if (spec.family == "cart") {
    auto l = std::make_unique<CartLearner>();
    TreeConfig cfg;
    cfg.max_depth = jint(P, "max_depth", 12);
    cfg.min_samples_leaf = jint(P, "min_samples_leaf", 5);
    l->m.fit(X, y, cfg);
    res = {{"max_depth", cfg.max_depth}, {"min_samples_leaf", cfg.min_samples_leaf}};
    out = std::move(l);
  } else if (spec.family == "random_forest") {
    auto l = std::make_unique<ForestLearner>();
    ForestConfig cfg;
    cfg.n_trees = jint(P, "n_trees", 300);
    cfg.max_depth = jint(P, "max_depth", 12);
    cfg.min_samples_leaf = jint(P, "min_samples_leaf", 5);
    cfg.mtry = jint(P, "mtry", -1);
    cfg.bootstrap = jbool(P, "bootstrap", true);
    l->m.fit(X, y, cfg, seed, threads);
    res = {{"n_trees", cfg.n_trees},
           {"max_depth", cfg.max_depth},
           {"min_samples_leaf", cfg.min_samples_leaf},
           {"mtry", l->m.resolved_mtry()},
           {"bootstrap", cfg.bootstrap}};
    if (cfg.bootstrap) {
      // OOB fit quality, over rows that were ever out of bag.
      std::vector<double> t, p;
      const auto& oob = l->m.oob_predictions();
      for (std::size_t i = 0; i < oob.size(); ++i) {
        if (oob[i]) {
          t.push_back(y(static_cast<Eigen::Index>(i)));
          p.push_back(*oob[i]);
        }
      }
      diag["oob_rows"] = t.size();
      if (t.size() >= 2) {
        const Eigen::VectorXd tv =
            Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
        const Eigen::VectorXd pv =
            Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
        const double mean = tv.mean();
        const double ss_tot = (tv.array() - mean).square().sum();
        if (ss_tot > 0.0) diag["oob_r2"] = 1.0 - (tv - pv).squaredNorm() / ss_tot;
      }
    }
    out = std::move(l);
  } else if (spec.family == "gbrt") {
    auto l = std::make_unique<GbrtLearner>();
    GbrtConfig cfg;
    cfg.n_stages = jint(P, "n_stages", 300);
    cfg.learning_rate = jnum(P, "learning_rate", 0.05);
    cfg.max_depth = jint(P, "max_depth", 3);
    cfg.min_samples_leaf = jint(P, "min_samples_leaf", 5);
    l->m.fit(X, y, cfg);
    res = {{"n_stages", cfg.n_stages},
           {"learning_rate", cfg.learning_rate},
           {"max_depth", cfg.max_depth},
           {"min_samples_leaf", cfg.min_samples_leaf}};
    diag["stage_mse"] = l->m.stage_mse();
    out = std::move(l);
  } else if (spec.family == "adaboost_r2") {
    auto l = std::make_unique<AdaLearner>();
    AdaBoostR2Config cfg;
    cfg.n_stages = jint(P, "n_stages", 100);
    cfg.max_depth = jint(P, "max_depth", 4);
    cfg.min_samples_leaf = jint(P, "min_samples_leaf", 5);
    l->m.fit(X, y, cfg, seed);
    res = {{"n_stages", cfg.n_stages},
           {"max_depth", cfg.max_depth},
           {"min_samples_leaf", cfg.min_samples_leaf}};
    diag["stages_kept"] = l->m.stage_count();
    diag["stopped_early"] = l->m.stopped_early();
    diag["perfect_stage"] = l->m.perfect_stage();
    diag["stage_avg_losses"] = l->m.stage_avg_losses();
    out = std::move(l);
  } else if (spec.family == "mlp") {
    auto l = std::make_unique<MlpLearner>();
    MlpConfig cfg;
    if (P.contains("hidden")) cfg.hidden = P.at("hidden").get<std::vector<int>>();
    cfg.epochs = jint(P, "epochs", 200);
    cfg.batch = jint(P, "batch", 32);
    cfg.lr = jnum(P, "lr", 0.01);
    cfg.standardized_input = true;  // scaled right here
    l->sx = sel::fit_scaler(X);
    l->y_mean = y.mean();
    const double ysd =
        std::sqrt((y.array() - l->y_mean).square().sum() / static_cast<double>(y.size()));
    l->y_scale = ysd > 0.0 ? ysd : 1.0;
    const Eigen::VectorXd ys = (y.array() - l->y_mean) / l->y_scale;
    l->net.fit(l->sx.transform(X), ys, cfg, seed);
    res = {{"hidden", cfg.hidden}, {"epochs", cfg.epochs}, {"batch", cfg.batch}, {"lr", cfg.lr}};
    diag["epoch_loss"] = l->net.epoch_loss();
    out = std::move(l);
  } else if (spec.family == "linear_svr") {
    auto l = std::make_unique<SvrLearner>();
    SvrConfig cfg;
    // Defaults operate on the unit-variance scaled target, so the default
    // tube half-width 0.1 is exactly 0.1 standard deviations of y.
    cfg.epsilon = jnum(P, "epsilon", 0.1);
    cfg.C = jnum(P, "C", 1.0);
    cfg.epochs = jint(P, "epochs", 200);
    cfg.lr = jnum(P, "lr", 1e-3);
    cfg.standardized_input = true;
    l->sx = sel::fit_scaler(X);
    l->y_mean = y.mean();
    const double ysd =
        std::sqrt((y.array() - l->y_mean).square().sum() / static_cast<double>(y.size()));
    l->y_scale = ysd > 0.0 ? ysd : 1.0;
    const Eigen::VectorXd ys = (y.array() - l->y_mean) / l->y_scale;
    l->m.fit(l->sx.transform(X), ys, cfg, seed);
    res = {{"epsilon", cfg.epsilon}, {"C", cfg.C}, {"epochs", cfg.epochs}, {"lr", cfg.lr}};
    diag["objective_trace"] = l->m.objective_trace();
    out = std::move(l);
  } else if (spec.family == "gnb_binned") {
    auto l = std::make_unique<GnbLearner>();
    GnbConfig cfg;
    cfg.n_bins = jint(P, "n_bins", 10);
    cfg.var_floor = jnum(P, "var_floor", 1e-9);
    l->m.fit(X, y, cfg);
    res = {{"n_bins", cfg.n_bins}, {"var_floor", cfg.var_floor}};
    if (!l->m.floored_bins().empty()) {
      diag["warning"] = "variance floor applied to whole bins";
      diag["floored_bins"] = l->m.floored_bins();
    }
    out = std::move(l);
  } else if (spec.family == "voting") {
    out = train_voting(X, y, P, seed, threads, &res, &diag);
  } else if (spec.family == "stacking") {
    out = train_stacking(X, y, P, seed, threads, &res, &diag);
  } else {
    throw std::invalid_argument("unknown model family '" + spec.family + "'");
  }

  if (resolved) *resolved = res;
  if (diagnostics) *diagnostics = diag;
  return out;
}

namespace {

std::unique_ptr<Learner> train_voting(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const json& params, std::uint64_t seed, int threads,
                                      json* resolved, json* diagnostics) {
  const auto specs = member_specs(params, "members", default_voting_members());
  if (specs.size() < 2) throw std::invalid_argument("voting: need >= 2 members");
  auto l = std::make_unique<VotingLearner>();
  json res_members = json::array();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    json mres, mdiag;
    l->members.push_back(train_learner(X, y, specs[i], derive_seed(seed, i), threads, &mres,
                                       &mdiag));
    res_members.push_back({{"family", specs[i].family}, {"params", mres}});
  }
  (*resolved)["members"] = res_members;
  (*diagnostics)["n_members"] = specs.size();
  return l;
}

std::unique_ptr<Learner> train_stacking(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const json& params, std::uint64_t seed, int threads,
                                        json* resolved, json* diagnostics) {
  const auto specs = member_specs(params, "bases", default_stacking_bases());
  if (specs.empty()) throw std::invalid_argument("stacking: need >= 1 base");
  const int k_inner = jint(params, "k_inner", 5);
  if (k_inner < 2) throw std::invalid_argument("stacking: need k_inner >= 2");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < static_cast<std::size_t>(k_inner)) {
    throw std::invalid_argument("stacking: fewer rows than inner folds");
  }

  // Seeded shuffle -> fold assignment; recorded so leakage is auditable.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x57ac));
  rng.shuffle(order);
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k_inner));
  }

  Eigen::MatrixXd meta_X(X.rows(), static_cast<Eigen::Index>(specs.size()));
  meta_X.setZero();
  std::size_t violations = 0;

  for (int f = 0; f < k_inner; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < n; ++i) {
      (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
    }
    if (tr.empty() || va.empty()) {
      throw std::runtime_error("stacking: inner fold " + std::to_string(f) + " is empty");
    }
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(tr.size()), X.cols());
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(static_cast<Eigen::Index>(i)) = X.row(tr[i]);
      ytr(static_cast<Eigen::Index>(i)) = y(tr[i]);
    }
    Eigen::MatrixXd Xva(static_cast<Eigen::Index>(va.size()), X.cols());
    for (std::size_t i = 0; i < va.size(); ++i) {
      Xva.row(static_cast<Eigen::Index>(i)) = X.row(va[i]);
    }
    for (std::size_t b = 0; b < specs.size(); ++b) {
      std::unique_ptr<Learner> base;
      try {
        base = train_learner(Xtr, ytr, specs[b],
                             derive_seed(derive_seed(seed, b), static_cast<std::uint64_t>(f)),
                             threads);
      } catch (const std::exception& e) {
        throw std::runtime_error("stacking: base '" + specs[b].family + "' failed on inner fold " +
                                 std::to_string(f) + ": " + e.what());
      }
      const Eigen::VectorXd pred = base->predict(Xva);
      for (std::size_t i = 0; i < va.size(); ++i) {
        // The producing model's training rows must not contain this row.
        if (fold_of[static_cast<std::size_t>(va[i])] != f) ++violations;
        meta_X(va[i], static_cast<Eigen::Index>(b)) = pred(static_cast<Eigen::Index>(i));
      }
    }
  }

  auto l = std::make_unique<StackingLearner>();
  l->meta.fit(meta_X, y, /*with_intercept=*/true);

  json res_bases = json::array();
  for (std::size_t b = 0; b < specs.size(); ++b) {
    json bres;
    try {
      l->bases.push_back(train_learner(X, y, specs[b], derive_seed(derive_seed(seed, 0xf17a11), b),
                                       threads, &bres));
    } catch (const std::exception& e) {
      throw std::runtime_error("stacking: base '" + specs[b].family +
                               "' failed on the full training set: " + e.what());
    }
    res_bases.push_back({{"family", specs[b].family}, {"params", bres}});
  }
  (*resolved)["bases"] = res_bases;
  (*resolved)["k_inner"] = k_inner;
  (*diagnostics)["fold_of"] = fold_of;
  (*diagnostics)["leakage_violations"] = violations;
  (*diagnostics)["meta_intercept"] = l->meta.intercept();
  (*diagnostics)["meta_coef"] =
      std::vector<double>(l->meta.coef().data(), l->meta.coef().data() + l->meta.coef().size());
  return l;
}

}  // namespace

std::unique_ptr<Learner> learner_from_json(const std::string& family,
                                           const nlohmann::json& params) {
  if (family == "ols") {
    auto l = std::make_unique<OlsLearner>();
    l->m = OlsModel::from_json(params);
    return l;
  }
  if (family == "naive_base") {
    auto l = std::make_unique<NaiveBaseLearner>();
    l->m = NaiveBaseModel::from_json(params);
    return l;
  }
  if (family == "lasso") {
    auto l = std::make_unique<LassoLearner>();
    l->m = LassoModel::from_json(params);
    return l;
  }
  if (family == "cart") {
    auto l = std::make_unique<CartLearner>();
    l->m = RegressionTree::from_json(params);
    return l;
  }
  if (family == "random_forest") {
    auto l = std::make_unique<ForestLearner>();
    l->m = RandomForest::from_json(params);
    return l;
  }
  if (family == "gbrt") {
    auto l = std::make_unique<GbrtLearner>();
    l->m = Gbrt::from_json(params);
    return l;
  }
  if (family == "adaboost_r2") {
    auto l = std::make_unique<AdaLearner>();
    l->m = AdaBoostR2::from_json(params);
    return l;
  }
  if (family == "mlp") {
    auto l = std::make_unique<MlpLearner>();
    l->sx = scaler_from_json(params.at("x_scaler"));
    l->y_mean = params.at("y_mean").get<double>();
    l->y_scale = params.at("y_scale").get<double>();
    l->net = Mlp::from_json(params.at("net"));
    return l;
  }
  if (family == "linear_svr") {
    auto l = std::make_unique<SvrLearner>();
    l->sx = scaler_from_json(params.at("x_scaler"));
    l->y_mean = params.at("y_mean").get<double>();
    l->y_scale = params.at("y_scale").get<double>();
    l->m = LinearSvr::from_json(params.at("svr"));
    return l;
  }
  if (family == "gnb_binned") {
    auto l = std::make_unique<GnbLearner>();
    l->m = GnbBinned::from_json(params);
    return l;
  }
  if (family == "voting") {
    auto l = std::make_unique<VotingLearner>();
    for (const auto& mj : params.at("members")) {
      l->members.push_back(
          learner_from_json(mj.at("family").get<std::string>(), mj.at("params")));
    }
    return l;
  }
  if (family == "stacking") {
    auto l = std::make_unique<StackingLearner>();
    for (const auto& bj : params.at("bases")) {
      l->bases.push_back(learner_from_json(bj.at("family").get<std::string>(), bj.at("params")));
    }
    l->meta = OlsModel::from_json(params.at("meta"));
    return l;
  }
  throw std::invalid_argument("unknown model family '" + family + "'");
}

ModelSpec resolve_spec(const ModelSpec& spec, const feat::FeatureMatrix& m) {
  ModelSpec out = spec;
  if (spec.family == "naive_base" && !spec.params.contains("feature_col")) {
    const std::string feature = spec.params.contains("feature")
                                    ? spec.params.at("feature").get<std::string>()
                                    : std::string("third_party_count");
    out.params["feature_col"] = m.col(feature);
  }
  return out;
}

TrainedModel train_model(const feat::FeatureMatrix& m, const ModelSpec& spec,
                         std::uint64_t seed, int threads) {
  if (!m.has_target) throw std::invalid_argument("train: matrix has no target");
  const ModelSpec resolved_spec = resolve_spec(spec, m);
  TrainedModel out;
  out.family = spec.family;
  out.seed = seed;
  out.schema = m.schema;
  out.schema_hash = m.schema_hash;
  out.impl = train_learner(m.X, m.y, resolved_spec, seed, threads, &out.config,
                           &out.diagnostics);
  out.training_metrics = eval::compute_metrics(m.y, out.impl->predict(m.X));
  return out;
}

}  // namespace linkvol::model
