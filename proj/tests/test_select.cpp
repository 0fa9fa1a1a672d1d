#include <doctest.h>

#include <cmath>
#include <limits>

#include "linkvol/common/rng.hpp"
#include "linkvol/feat/featurize.hpp"
#include "linkvol/model/linear.hpp"
#include "linkvol/sel/lasso.hpp"
#include "linkvol/sel/selection.hpp"
#include "linkvol/sel/standardize.hpp"
#include "linkvol/sel/vif.hpp"

using namespace linkvol;
using namespace linkvol::sel;

namespace {

Eigen::MatrixXd random_matrix(Rng& r, int n, int p) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = r.normal();
  }
  return X;
}

}  // namespace

TEST_CASE("scaler standardizes and inverts") {
  Rng r(3);
  Eigen::MatrixXd X = random_matrix(r, 200, 4);
  X.col(2).setConstant(7.0);  // constant feature
  const Scaler s = fit_scaler(X);
  const Eigen::MatrixXd Z = s.transform(X);
  for (int j : {0, 1, 3}) {
    CHECK(Z.col(j).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::sqrt(Z.col(j).squaredNorm() / 200) == doctest::Approx(1.0));
  }
  CHECK(Z.col(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(static_cast<bool>(s.constant[2]));
  CHECK(s.scale(2) == 1.0);
  const Eigen::MatrixXd back = s.inverse(Z);
  CHECK((back - X).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lasso at lambda zero equals OLS on full-rank instances") {
  Rng r(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 60, p = 5;
    Eigen::MatrixXd X = random_matrix(r, n, p);
    Eigen::VectorXd beta_true(p);
    for (int j = 0; j < p; ++j) beta_true(j) = r.uniform(-2.0, 2.0);
    Eigen::VectorXd y = X * beta_true;
    for (int i = 0; i < n; ++i) y(i) += 0.1 * r.normal();
    // centre y so the no-intercept lasso and the no-intercept OLS agree
    const Eigen::VectorXd yc = y.array() - y.mean();

    const LassoFit fit = lasso_fit(X, yc, 0.0);
    const Eigen::VectorXd ols =
        (X.transpose() * X).ldlt().solve(X.transpose() * yc);
    CHECK((fit.beta - ols).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(fit.converged);
  }
}

TEST_CASE("lasso soft-threshold worked value: S(3,1)=2 on an orthonormal column") {
  // with (1/N)·Σx² = 1 and (1/N)·x·y = 3, one coordinate step gives S(3,λ)
  const int n = 50;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = (i % 2 == 0) ? 1.0 : -1.0;  // unit variance, zero mean
  const Eigen::VectorXd y = 3.0 * x;
  const LassoFit fit = lasso_fit(x, y, 1.0);
  CHECK(fit.beta(0) == doctest::Approx(2.0));
  // negative side: S(-3, 1) = -2
  const LassoFit neg = lasso_fit(x, Eigen::VectorXd(-y), 1.0);
  CHECK(neg.beta(0) == doctest::Approx(-2.0));
  // at lambda >= |corr| the coefficient dies: S(3, 3) = 0
  CHECK(lasso_fit(x, y, 3.0).beta(0) == 0.0);
}

TEST_CASE("lambda_max zeroes every coefficient") {
  Rng r(19);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd X = random_matrix(r, 40, 6);
    Eigen::VectorXd y = random_matrix(r, 40, 1).col(0);
    y.array() -= y.mean();
    const double lmax = lasso_lambda_max(X, y);
    CHECK(lasso_fit(X, y, lmax).beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(lasso_fit(X, y, lmax * 1.5).beta.cwiseAbs().maxCoeff() == 0.0);
    // just below lambda_max something survives
    CHECK(lasso_fit(X, y, lmax * 0.99).beta.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("lasso objective never increases across sweeps on 100 random instances") {
  Rng r(23);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 30 + static_cast<int>(r.bounded(40));
    const int p = 2 + static_cast<int>(r.bounded(8));
    Eigen::MatrixXd X = random_matrix(r, n, p);
    Eigen::VectorXd y = random_matrix(r, n, 1).col(0) * 3.0;
    y.array() -= y.mean();
    const double lambda = r.uniform(0.0, 0.5);
    const LassoFit fit = lasso_fit(X, y, lambda);
    REQUIRE(fit.objective_trace.size() >= 1);
    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s) {
      CHECK(fit.objective_trace[s] <= fit.objective_trace[s - 1] + 1e-12);
    }
  }
}

TEST_CASE("lasso warm start converges to the same solution") {
  Rng r(29);
  Eigen::MatrixXd X = random_matrix(r, 80, 5);
  Eigen::VectorXd y = X.col(0) * 2.0 - X.col(3) * 1.5;
  for (int i = 0; i < 80; ++i) y(i) += 0.05 * r.normal();
  y.array() -= y.mean();
  const LassoFit cold = lasso_fit(X, y, 0.1);
  Eigen::VectorXd seed = cold.beta * 0.9;
  const LassoFit warm = lasso_fit(X, y, 0.1, {}, &seed);
  CHECK((cold.beta - warm.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lasso cv picks a grid lambda and shrinks towards informative features") {
  Rng r(37);
  const int n = 150, p = 8;
  Eigen::MatrixXd X = random_matrix(r, n, p);
  // only features 0 and 1 matter
  Eigen::VectorXd y = 3.0 * X.col(0) - 2.0 * X.col(1);
  for (int i = 0; i < n; ++i) y(i) += 0.5 * r.normal();
  y.array() -= y.mean();

  const LassoCvResult cv = lasso_cv(X, y, 5, 30, 3.0, 123);
  CHECK(cv.lambda_grid.size() == 30);
  CHECK(cv.cv_mse_mean.size() == 30);
  // grid is descending from lambda_max
  CHECK(cv.lambda_grid.front() == doctest::Approx(lasso_lambda_max(X, y)));
  for (std::size_t i = 1; i < cv.lambda_grid.size(); ++i) {
    CHECK(cv.lambda_grid[i] < cv.lambda_grid[i - 1]);
  }
  bool on_grid = false;
  for (double l : cv.lambda_grid) on_grid |= (l == cv.lambda_best);
  CHECK(on_grid);
  // informative features dominate the refit
  CHECK(std::abs(cv.fit.beta(0)) > 1.0);
  CHECK(std::abs(cv.fit.beta(1)) > 1.0);
  for (int j = 2; j < p; ++j) CHECK(std::abs(cv.fit.beta(j)) < 0.5);
  // same seed, same answer
  const LassoCvResult again = lasso_cv(X, y, 5, 30, 3.0, 123);
  CHECK(again.lambda_best == cv.lambda_best);
  CHECK((again.fit.beta - cv.fit.beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vif: orthogonal design scores one") {
  // orthogonal columns: +-1 design
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  const auto v = vif(X);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("vif matches the two-step regression oracle on 50 random designs") {
  Rng r(41);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 40 + static_cast<int>(r.bounded(40));
    const int p = 3 + static_cast<int>(r.bounded(4));
    Eigen::MatrixXd X = random_matrix(r, n, p);
    // inject correlation so VIFs move away from 1
    X.col(1) = 0.7 * X.col(0) + 0.3 * X.col(1);
    const auto got = vif(X);
    REQUIRE(got.size() == static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      // oracle: regress column j on the others (with intercept), vif = 1/(1-R^2)
      Eigen::MatrixXd A(n, p);  // others + intercept
      int c = 0;
      for (int k = 0; k < p; ++k) {
        if (k != j) A.col(c++) = X.col(k);
      }
      A.col(p - 1).setOnes();
      const Eigen::VectorXd target = X.col(j);
      const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(target);
      const Eigen::VectorXd resid = target - A * coef;
      const double ss_res = resid.squaredNorm();
      const double ss_tot = (target.array() - target.mean()).square().sum();
      const double r2 = 1.0 - ss_res / ss_tot;
      const double expected = 1.0 / (1.0 - r2);
      CHECK(got[j] == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("vif marks perfect collinearity as infinite") {
  Rng r(43);
  Eigen::MatrixXd X = random_matrix(r, 30, 3);
  Eigen::MatrixXd X4(30, 4);
  X4 << X, X.col(0);  // duplicated column
  const auto v = vif(X4);
  CHECK(std::isinf(v[0]));
  CHECK(std::isinf(v[3]));
  CHECK(std::isfinite(v[1]));

  // constant column is collinear with the intercept
  Eigen::MatrixXd Xc = X;
  Xc.col(2).setConstant(5.0);
  CHECK(std::isinf(vif(Xc)[2]));
}

TEST_CASE("vif needs more rows than columns unless ridge-stabilized") {
  Eigen::MatrixXd X(3, 3);
  X << 1, 2, 3, 4, 5, 6, 7, 8, 10;
  CHECK_THROWS_WITH_AS(vif(X), doctest::Contains("ridge"), std::invalid_argument);
  const auto v = vif(X, 1e-6);  // fallback enabled
  CHECK(v.size() == 3);
  for (double x : v) CHECK(x >= 1.0);
}

TEST_CASE("selection report ranks by absolute lasso weight with gini sidecar") {
  Rng r(47);
  const int n = 200;
  Eigen::MatrixXd X = random_matrix(r, n, 4);
  Eigen::VectorXd y = 4.0 * X.col(2) + 1.0 * X.col(0);
  for (int i = 0; i < n; ++i) y(i) += 0.3 * r.normal();

  feat::FeatureMatrix m;
  m.schema = {"alpha", "beta", "gamma", "delta"};
  m.schema_hash = feat::schema_digest(m.schema);
  m.X = X;
  m.y = y;
  m.has_target = true;
  for (int i = 0; i < n; ++i) {
    m.keys.push_back({"e" + std::to_string(i), Date::parse("2020-01-01")});
    m.row_sites.push_back("s" + std::to_string(i % 10));
  }

  const std::map<std::string, double> gini = {{"alpha", 0.2}, {"gamma", 0.7}};
  const SelectionReport rep = build_selection_report(m, 5, 7, &gini);
  REQUIRE(rep.records.size() == 4);
  // strongest effect first
  CHECK(rep.records[0].name == "gamma");
  CHECK(rep.records[1].name == "alpha");
  CHECK(rep.records[0].lasso_abs > rep.records[1].lasso_abs);
  CHECK(rep.records[0].gini.has_value());
  CHECK(*rep.records[0].gini == 0.7);
  CHECK_FALSE(rep.records[2].gini.has_value());
  for (const auto& rec : rep.records) CHECK(rec.vif >= 1.0);
  CHECK(rep.lambda_used > 0.0);
  CHECK(rep.lasso_converged);

  // csv has one line per feature plus header
  const std::string csv = rep.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
