#include "linkvol/sel/lasso.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "linkvol/common/rng.hpp"

namespace linkvol::sel {

namespace {

double soft_threshold(double rho, double lambda) {
  if (rho > lambda) return rho - lambda;
  if (rho < -lambda) return rho + lambda;
  return 0.0;
}

void require_finite(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("lasso: non-finite values in the design or response");
  }
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  require_finite(X, y);
  const double n = static_cast<double>(X.rows());
  // Same per-column dot as the solver's rho, so a fit at exactly lambda_max
  // thresholds every coordinate to exactly zero.
  double best = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    best = std::max(best, std::abs(X.col(j).dot(y) / n));
  }
  return best;
}

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& opts, const Eigen::VectorXd* warm_start) {
  require_finite(X, y);
  if (lambda < 0.0) throw std::invalid_argument("lasso: lambda must be >= 0");
  if (X.rows() != y.size()) throw std::invalid_argument("lasso: X/y row mismatch");
  const Eigen::Index p = X.cols();
  const double n = static_cast<double>(X.rows());

  LassoFit fit;
  fit.lambda = lambda;
  fit.beta = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
  if (warm_start && warm_start->size() != p) {
    throw std::invalid_argument("lasso: warm start has wrong length");
  }

  // col_sq[j] = (1/N) sum x_ij^2; 1 for standardized columns, kept general.
  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq(j) = X.col(j).squaredNorm() / n;

  Eigen::VectorXd r = y - X * fit.beta;
  const auto objective = [&]() {
    return r.squaredNorm() / (2.0 * n) + lambda * fit.beta.cwiseAbs().sum();
  };

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;  // constant-zero column stays at 0
      const double old = fit.beta(j);
      const double rho = X.col(j).dot(r) / n + col_sq(j) * old;
      const double updated = soft_threshold(rho, lambda) / col_sq(j);
      if (updated != old) {
        r += X.col(j) * (old - updated);
        fit.beta(j) = updated;
        max_delta = std::max(max_delta, std::abs(updated - old));
      }
    }
    fit.objective_trace.push_back(objective());
    fit.sweeps = sweep + 1;
    if (max_delta < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

LassoCvResult lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k_folds,
                       int grid_points, double decades, std::uint64_t seed,
                       const LassoOptions& opts) {
  require_finite(X, y);
  const Eigen::Index n = X.rows();
  if (k_folds < 2) throw std::invalid_argument("lasso_cv: need k_folds >= 2");
  if (n < k_folds) throw std::invalid_argument("lasso_cv: fewer rows than folds");
  if (grid_points < 2) throw std::invalid_argument("lasso_cv: need >= 2 grid points");

  LassoCvResult res;
  const double lmax = lasso_lambda_max(X, y);
  if (lmax == 0.0) {
    // Response orthogonal to every feature: all-zero solution at any lambda.
    res.lambda_best = 0.0;
    res.lambda_grid = {0.0};
    res.cv_mse_mean = {y.squaredNorm() / static_cast<double>(n)};
    res.cv_mse_std = {0.0};
    res.fit = lasso_fit(X, y, 0.0, opts);
    return res;
  }
  const double lmin = lmax * std::pow(10.0, -decades);
  for (int g = 0; g < grid_points; ++g) {
    const double t = static_cast<double>(g) / (grid_points - 1);
    res.lambda_grid.push_back(lmax * std::pow(lmin / lmax, t));
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x1a550));
  rng.shuffle(order);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) {
    fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
  }

  res.cv_mse_mean.assign(res.lambda_grid.size(), 0.0);
  res.cv_mse_std.assign(res.lambda_grid.size(), 0.0);
  std::vector<std::vector<double>> per_fold(res.lambda_grid.size());

  for (int f = 0; f < k_folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    }
    Eigen::MatrixXd Xtr(tr.size(), X.cols()), Xva(va.size(), X.cols());
    Eigen::VectorXd ytr(tr.size()), yva(va.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(static_cast<Eigen::Index>(i)) = X.row(tr[i]);
      ytr(static_cast<Eigen::Index>(i)) = y(tr[i]);
    }
    for (std::size_t i = 0; i < va.size(); ++i) {
      Xva.row(static_cast<Eigen::Index>(i)) = X.row(va[i]);
      yva(static_cast<Eigen::Index>(i)) = y(va[i]);
    }
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
    for (std::size_t g = 0; g < res.lambda_grid.size(); ++g) {
      const LassoFit fit = lasso_fit(Xtr, ytr, res.lambda_grid[g], opts, &warm);
      warm = fit.beta;
      const double mse = (yva - Xva * fit.beta).squaredNorm() / static_cast<double>(va.size());
      per_fold[g].push_back(mse);
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 0; g < res.lambda_grid.size(); ++g) {
    double mean = 0.0;
    for (const double m : per_fold[g]) mean += m;
    mean /= static_cast<double>(per_fold[g].size());
    double var = 0.0;
    for (const double m : per_fold[g]) var += (m - mean) * (m - mean);
    var /= static_cast<double>(per_fold[g].size());
    res.cv_mse_mean[g] = mean;
    res.cv_mse_std[g] = std::sqrt(var);
    if (mean < res.cv_mse_mean[best]) best = g;
  }
  res.lambda_best = res.lambda_grid[best];

  // Warm-start the final fit down the path for the same convergence benefit.
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
  for (std::size_t g = 0; g <= best; ++g) {
    const LassoFit fit = lasso_fit(X, y, res.lambda_grid[g], opts, &warm);
    warm = fit.beta;
    if (g == best) res.fit = fit;
  }
  return res;
}

}  // namespace linkvol::sel
