#include <doctest.h>

#include <cmath>
#include <set>

#include "linkvol/common/rng.hpp"
#include "linkvol/model/boosting.hpp"
#include "linkvol/model/forest.hpp"
#include "linkvol/model/gnb.hpp"
#include "linkvol/model/linear.hpp"
#include "linkvol/model/mlp.hpp"
#include "linkvol/model/svr.hpp"
#include "linkvol/model/tree.hpp"

using namespace linkvol;
using namespace linkvol::model;

namespace {

Eigen::MatrixXd random_matrix(Rng& r, int n, int p) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = r.normal();
  }
  return X;
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("ols recovers exact coefficients and intercept") {
  Rng r(1);
  Eigen::MatrixXd X = random_matrix(r, 50, 3);
  Eigen::VectorXd beta(3);
  beta << 2.0, -1.0, 0.5;
  const Eigen::VectorXd y = X * beta + Eigen::VectorXd::Constant(50, 4.0);
  OlsModel m;
  m.fit(X, y);
  CHECK((m.coef() - beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(m.intercept() == doctest::Approx(4.0));
  CHECK((m.predict(X) - y).cwiseAbs().maxCoeff() < 1e-9);

  OlsModel no_int;
  no_int.fit(X, Eigen::VectorXd(X * beta), false);
  CHECK(no_int.intercept() == 0.0);
  CHECK((no_int.coef() - beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("naive base slope is sum(xy)/sum(x^2)") {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 3, 4;
  y << 3, 5, 10, 12;
  // hand oracle: sum(xy) = 3 + 10 + 30 + 48 = 91; sum(x^2) = 30
  CHECK(fit_naive_base(x, y) == doctest::Approx(91.0 / 30.0));

  Eigen::MatrixXd X(4, 2);
  X.col(0).setConstant(9.0);  // decoy column
  X.col(1) = x;
  NaiveBaseModel m;
  m.fit(X, y, 1);
  CHECK(m.beta() == doctest::Approx(91.0 / 30.0));
  CHECK(m.feature_col() == 1);
  Eigen::RowVectorXd probe(2);
  probe << 0.0, 10.0;
  CHECK(m.predict_row(probe) == doctest::Approx(910.0 / 30.0));

  CHECK_THROWS(fit_naive_base(Eigen::VectorXd::Zero(4), y));
}

TEST_CASE("regression tree nails XOR at depth two") {
  Eigen::MatrixXd X(8, 2);
  Eigen::VectorXd y(8);
  int i = 0;
  for (double a : {0.0, 1.0}) {
    for (double b : {0.0, 1.0}) {
      for (int rep = 0; rep < 2; ++rep) {
        X(i, 0) = a;
        X(i, 1) = b;
        y(i) = (a == b) ? 0.0 : 1.0;
        ++i;
      }
    }
  }
  TreeConfig cfg;
  cfg.max_depth = 2;
  cfg.min_samples_leaf = 1;
  RegressionTree t;
  t.fit(X, y, cfg);
  CHECK((t.predict(X) - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tree respects depth and leaf-size limits") {
  Rng r(5);
  Eigen::MatrixXd X = random_matrix(r, 100, 2);
  Eigen::VectorXd y = X.col(0) * 3.0;
  TreeConfig stump;
  stump.max_depth = 1;
  stump.min_samples_leaf = 1;
  RegressionTree t;
  t.fit(X, y, stump);
  CHECK(t.node_count() == 3);  // root plus two leaves
  // leaf means: predictions take at most two distinct values
  const Eigen::VectorXd pred = t.predict(X);
  std::set<double> uniq(pred.data(), pred.data() + pred.size());
  CHECK(uniq.size() == 2);

  TreeConfig big_leaf;
  big_leaf.min_samples_leaf = 100;
  RegressionTree t2;
  t2.fit(X, y, big_leaf);
  CHECK(t2.node_count() == 1);  // cannot split without violating the minimum
  CHECK(t2.predict(X)(0) == doctest::Approx(y.mean()));
}

TEST_CASE("tree serialization round trip") {
  Rng r(6);
  Eigen::MatrixXd X = random_matrix(r, 80, 3);
  Eigen::VectorXd y = X.col(0) - 2.0 * X.col(2);
  RegressionTree t;
  t.fit(X, y, {});
  const RegressionTree back = RegressionTree::from_json(t.to_json());
  CHECK((back.predict(X) - t.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest beats a stump, fills oob, and importances sum to one") {
  Rng r(7);
  const int n = 300;
  Eigen::MatrixXd X = random_matrix(r, n, 4);
  Eigen::VectorXd y = X.col(0) * 2.0 + X.col(1).array().square().matrix();
  for (int i = 0; i < n; ++i) y(i) += 0.1 * r.normal();

  ForestConfig cfg;
  cfg.n_trees = 60;
  cfg.max_depth = 8;
  RandomForest f;
  f.fit(X, y, cfg, 99);
  CHECK(f.trees().size() == 60);
  CHECK(f.resolved_mtry() == 2);  // ceil(4/3)

  const auto& oob = f.oob_predictions();
  REQUIRE(oob.size() == static_cast<std::size_t>(n));
  int have = 0;
  for (const auto& o : oob) have += o.has_value();
  CHECK(have > n / 2);  // expected miss rate per tree is (1-1/n)^n ~ 0.37

  const auto imp = f.feature_importances();
  REQUIRE(imp.size() == 4);
  double total = 0.0;
  for (double v : imp) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0));
  // informative features carry the weight
  CHECK(imp[0] + imp[1] > 0.8);

  // same seed, same forest; different thread counts agree
  RandomForest f2;
  f2.fit(X, y, cfg, 99, 4);
  CHECK((f2.predict(X) - f.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest importance concentrates on the only informative feature") {
  Rng r(8);
  const int n = 200;
  Eigen::MatrixXd X = random_matrix(r, n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = std::sin(X(i, 0) * 2.0) * 5.0;  // pure function of col 0
  ForestConfig cfg;
  cfg.n_trees = 40;
  cfg.mtry = 0;  // consider both columns at every split; the noise column never wins
  RandomForest f;
  f.fit(X, y, cfg, 11);
  CHECK(f.feature_importances()[0] > 0.9);

  // with mtry = 1 the noise column is forced into half the candidate draws,
  // so it picks up reduction, but the informative column still dominates
  ForestConfig narrow = cfg;
  narrow.mtry = 1;
  RandomForest fn;
  fn.fit(X, y, narrow, 11);
  CHECK(fn.feature_importances()[0] > 0.6);
}

TEST_CASE("gbrt stage error is non-increasing and improves on its first stage") {
  Rng r(9);
  const int n = 250;
  Eigen::MatrixXd X = random_matrix(r, n, 3);
  Eigen::VectorXd y = (X.col(0).array() * X.col(1).array()).matrix() + X.col(2) * 0.5;
  GbrtConfig cfg;
  cfg.n_stages = 300;
  Gbrt g;
  g.fit(X, y, cfg);
  const auto& trace = g.stage_mse();
  REQUIRE(trace.size() == 300);
  for (std::size_t s = 1; s < trace.size(); ++s) CHECK(trace[s] <= trace[s - 1] + 1e-12);
  CHECK(trace.back() < trace.front() * 0.5);
  CHECK(g.f0() == doctest::Approx(y.mean()));

  const Gbrt back = Gbrt::from_json(g.to_json());
  CHECK((back.predict(X) - g.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weighted median picks the smallest value reaching half the weight") {
  CHECK(weighted_median({{1.0, 1.0}, {2.0, 1.0}, {3.0, 5.0}}) == 3.0);
  CHECK(weighted_median({{1.0, 1.0}, {2.0, 1.0}}) == 1.0);  // half reached at the first
  CHECK(weighted_median({{5.0, 2.0}}) == 5.0);
  CHECK(weighted_median({{3.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}}) == 2.0);  // order-insensitive
}

TEST_CASE("adaboost r2 fits, stops on uninformative data, and collapses on a perfect fit") {
  Rng r(10);
  const int n = 200;
  Eigen::MatrixXd X = random_matrix(r, n, 2);
  Eigen::VectorXd y = X.col(0) * 2.0 + X.col(1);
  AdaBoostR2Config cfg;
  cfg.n_stages = 40;
  AdaBoostR2 a;
  a.fit(X, y, cfg, 3);
  CHECK(a.stage_count() >= 1);
  CHECK(mse(a.predict(X), y) < mse(Eigen::VectorXd::Constant(n, y.mean()), y));
  for (double l : a.stage_avg_losses()) CHECK(l < 0.5);

  // hopeless from the start: constant predictor, alternating target -> the
  // very first stage crosses the average-loss rule and there is no model
  Eigen::MatrixXd Xu(n, 1);
  Xu.setConstant(1.0);
  Eigen::VectorXd yu(n);
  for (int i = 0; i < n; ++i) yu(i) = (i % 2 == 0) ? 0.0 : 1.0;
  AdaBoostR2Config weak;
  weak.n_stages = 20;
  weak.max_depth = 1;
  weak.min_samples_leaf = 1;
  AdaBoostR2 hopeless;
  CHECK_THROWS_WITH_AS(hopeless.fit(Xu, yu, weak, 5),
                       doctest::Contains("average loss >= 0.5"), std::runtime_error);

  // partially hopeless: a clean step plus same-x pairs with opposite extreme
  // targets.  Early stages fit the step (kept); reweighting then piles mass
  // onto the unfittable pairs until a stage crosses 0.5 and is discarded.
  const int n_mix = 100;
  Eigen::MatrixXd Xm(n_mix, 1);
  Eigen::VectorXd ym(n_mix);
  for (int i = 0; i < 80; ++i) {
    Xm(i, 0) = static_cast<double>(i);
    ym(i) = i < 40 ? 0.0 : 10.0;
  }
  for (int j = 0; j < 10; ++j) {
    Xm(80 + 2 * j, 0) = 200.0 + j;
    Xm(81 + 2 * j, 0) = 200.0 + j;  // same x: no split can separate the twins
    ym(80 + 2 * j) = 1000.0;
    ym(81 + 2 * j) = -1000.0;
  }
  AdaBoostR2Config mix_cfg;
  mix_cfg.n_stages = 25;
  mix_cfg.max_depth = 3;
  mix_cfg.min_samples_leaf = 1;
  AdaBoostR2 stopped;
  stopped.fit(Xm, ym, mix_cfg, 5);
  CHECK(stopped.stopped_early());
  CHECK(!stopped.perfect_stage());
  CHECK(stopped.stage_count() >= 1);
  CHECK(stopped.stage_count() < 25);
  for (double l : stopped.stage_avg_losses()) CHECK(l < 0.5);  // kept stages only

  // a learner that nails the target on the first stage stops with one stage
  Eigen::VectorXd y_easy(n);
  for (int i = 0; i < n; ++i) y_easy(i) = X(i, 0) > 0 ? 10.0 : -10.0;
  AdaBoostR2 perfect;
  perfect.fit(X, y_easy, {}, 7);
  CHECK(perfect.perfect_stage());
  CHECK(perfect.stage_count() == 1);
  CHECK((perfect.predict(X) - y_easy).cwiseAbs().maxCoeff() == 0.0);

  const AdaBoostR2 back = AdaBoostR2::from_json(a.to_json());
  CHECK((back.predict(X) - a.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp analytic gradient matches central finite differences") {
  Rng probe_rng(77);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng r(derive_seed(1000, seed));
    const int n = 24, p = 3;
    Eigen::MatrixXd X = random_matrix(r, n, p);
    Eigen::VectorXd y = X.col(0) - 0.5 * X.col(2);
    for (int i = 0; i < n; ++i) y(i) += 0.05 * r.normal();

    Mlp net;
    net.init(p, {5, 4}, seed * 31 + 7);
    const Eigen::VectorXd theta0 = net.get_params();
    const Eigen::VectorXd grad = net.gradient(X, y);
    REQUIRE(grad.size() == theta0.size());

    const double h = 1e-6;
    for (int k = 0; k < 5; ++k) {
      const Eigen::Index idx =
          static_cast<Eigen::Index>(probe_rng.bounded(static_cast<std::uint64_t>(theta0.size())));
      Eigen::VectorXd up = theta0, dn = theta0;
      up(idx) += h;
      dn(idx) -= h;
      net.set_params(up);
      const double fu = net.loss(X, y);
      net.set_params(dn);
      const double fd = net.loss(X, y);
      net.set_params(theta0);
      const double fd_grad = (fu - fd) / (2.0 * h);
      const double denom = std::max({std::abs(fd_grad), std::abs(grad(idx)), 1e-8});
      CHECK(std::abs(fd_grad - grad(idx)) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked == 50);
}

TEST_CASE("mlp learns a linear map on standardized data") {
  Rng r(12);
  const int n = 400;
  Eigen::MatrixXd X = random_matrix(r, n, 2);
  Eigen::VectorXd y = 0.8 * X.col(0) - 0.3 * X.col(1);
  MlpConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 150;
  cfg.standardized_input = true;
  Mlp net;
  net.fit(X, y, cfg, 21);
  CHECK(mse(net.predict(X), y) < 0.01);
  const auto& trace = net.epoch_loss();
  REQUIRE(trace.size() == 150);
  CHECK(trace.back() < trace.front());

  const Mlp back = Mlp::from_json(net.to_json());
  CHECK((back.predict(X) - net.predict(X)).cwiseAbs().maxCoeff() == 0.0);

  // refuses raw inputs unless told they are standardized
  MlpConfig raw = cfg;
  raw.standardized_input = false;
  Mlp refuse;
  CHECK_THROWS(refuse.fit(X, y, raw, 21));
}

TEST_CASE("svr objective trace never increases and fits a clean line") {
  Rng r(13);
  const int n = 300;
  Eigen::MatrixXd X = random_matrix(r, n, 2);
  Eigen::VectorXd y = 1.5 * X.col(0) - 0.7 * X.col(1);
  SvrConfig cfg;
  cfg.standardized_input = true;
  cfg.epochs = 300;
  LinearSvr svr;
  svr.fit(X, y, cfg, 4);
  const auto& trace = svr.objective_trace();
  REQUIRE(!trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  // inside the epsilon tube for most points
  const Eigen::VectorXd pred = svr.predict(X);
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::abs(pred(i) - y(i)) < 0.25;
  CHECK(inside > n * 8 / 10);

  const LinearSvr back = LinearSvr::from_json(svr.to_json());
  CHECK((back.predict(X) - svr.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gnb binned posterior on a hand-checkable instance") {
  // Equal-frequency edges sit at sorted[b*n/k] and bins are (lo, hi], so with
  // 8 distinct targets and k=2 the lower bin takes five rows and the upper
  // three.  Both clusters are built with population variance exactly 0.02 so
  // the posterior reduces to the prior ratio at equidistant probes.
  const double d = std::sqrt(0.03);  // {4-d, 4, 4+d} has population variance 0.02
  Eigen::MatrixXd X(8, 1);
  X << -0.2, -0.1, 0.0, 0.1, 0.2, 4.0 - d, 4.0, 4.0 + d;
  Eigen::VectorXd y(8);
  y << 10, 11, 12, 13, 14, 20, 21, 22;
  GnbConfig cfg;
  cfg.n_bins = 2;
  GnbBinned g;
  g.fit(X, y, cfg);
  CHECK(g.bin_count() == 2);
  CHECK(g.floored_bins().empty());

  const auto j = g.to_json();
  CHECK(j.at("priors")[0].get<double>() == doctest::Approx(5.0 / 8.0).epsilon(1e-12));
  CHECK(j.at("priors")[1].get<double>() == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
  CHECK(j.at("bin_target_mean")[0].get<double>() == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(j.at("bin_target_mean")[1].get<double>() == doctest::Approx(21.0).epsilon(1e-12));
  CHECK(j.at("feat_mean")[0][0].get<double>() == doctest::Approx(0.0).scale(1.0));
  CHECK(j.at("feat_mean")[1][0].get<double>() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(j.at("feat_var")[0][0].get<double>() == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(j.at("feat_var")[1][0].get<double>() == doctest::Approx(0.02).epsilon(1e-9));

  // probes deep inside one cluster collapse the posterior onto its bin mean
  Eigen::RowVectorXd probe(1);
  probe << 0.0;
  CHECK(g.predict_row(probe) == doctest::Approx(12.0).epsilon(1e-9));
  probe << 4.0;
  CHECK(g.predict_row(probe) == doctest::Approx(21.0).epsilon(1e-9));

  // x = 2 is equidistant from both means with equal variances, so the
  // posterior is exactly the prior ratio: 5/8 * 12 + 3/8 * 21 = 15.375
  probe << 2.0;
  CHECK(g.predict_row(probe) == doctest::Approx(15.375).epsilon(1e-9));

  // shifting by ln(5/3)/200 cancels the prior advantage: posterior 1/2 each
  probe << 2.0 + std::log(5.0 / 3.0) / 200.0;
  CHECK(g.predict_row(probe) == doctest::Approx((12.0 + 21.0) / 2.0).epsilon(1e-9));

  const GnbBinned back = GnbBinned::from_json(g.to_json());
  CHECK((back.predict(X) - g.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gnb flags degenerate bins instead of dividing by zero") {
  // lower bin (targets <= sorted[3] = 10) sees a constant predictor: its
  // variance is floored and the bin is flagged; the upper bin is untouched
  Eigen::MatrixXd X(6, 1);
  X << 5, 5, 5, 5, 7, 9;
  Eigen::VectorXd y(6);
  y << 1, 2, 3, 10, 11, 12;
  GnbConfig cfg;
  cfg.n_bins = 2;
  GnbBinned g;
  g.fit(X, y, cfg);
  REQUIRE(g.floored_bins().size() == 1);
  CHECK(g.floored_bins()[0] == 0);

  Eigen::RowVectorXd probe(1);
  probe << 5.0;  // dead on the floored bin's mean: its tiny variance dominates
  CHECK(g.predict_row(probe) == doctest::Approx(4.0).epsilon(1e-5));
  probe << 8.0;  // far outside the floored bin, inside the healthy one
  CHECK(g.predict_row(probe) == doctest::Approx(11.5).epsilon(1e-6));

  // fully degenerate: every predictor constant -> every bin flagged, and the
  // posterior falls back to the priors alone: 3/4 * 2 + 1/4 * 4 = 2.5
  Eigen::MatrixXd Xc = Eigen::MatrixXd::Constant(4, 1, 5.0);
  Eigen::VectorXd yc(4);
  yc << 1, 2, 3, 4;  // edge sorted[2] = 3: bins {1,2,3} and {4}
  GnbBinned gc;
  gc.fit(Xc, yc, cfg);
  REQUIRE(gc.floored_bins().size() == 2);
  probe << 5.0;  // on the shared mean the likelihoods cancel exactly
  CHECK(gc.predict_row(probe) == doctest::Approx(2.5).epsilon(1e-12));
  probe << 123.0;  // far away the huge quadratic term absorbs prior bits
  CHECK(gc.predict_row(probe) == doctest::Approx(2.5).epsilon(1e-3));
}

TEST_CASE("forest serialization round trip") {
  Rng r(14);
  Eigen::MatrixXd X = random_matrix(r, 120, 3);
  Eigen::VectorXd y = X.col(1) * 4.0;
  ForestConfig cfg;
  cfg.n_trees = 10;
  RandomForest f;
  f.fit(X, y, cfg, 8);
  const RandomForest back = RandomForest::from_json(f.to_json());
  CHECK((back.predict(X) - f.predict(X)).cwiseAbs().maxCoeff() == 0.0);
}
