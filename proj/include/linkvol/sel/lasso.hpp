#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace linkvol::sel {

struct LassoOptions {
  double tol = 1e-8;       // max coefficient change per sweep
  int max_sweeps = 10000;
};

struct LassoFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  std::vector<double> objective_trace;  // (1/2N)RSS + lambda*L1, once per sweep
  int sweeps = 0;
  bool converged = false;
};

/// Smallest lambda at which the all-zero solution is optimal.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Cyclic coordinate descent with soft-thresholding on the given design
/// (callers standardize first when they want comparable magnitudes).
/// warm_start, when given, seeds the coefficients.
LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& opts = {}, const Eigen::VectorXd* warm_start = nullptr);

struct LassoCvResult {
  double lambda_best = 0.0;
  std::vector<double> lambda_grid;   // descending
  std::vector<double> cv_mse_mean;   // aligned with lambda_grid
  std::vector<double> cv_mse_std;
  LassoFit fit;                      // refit on all rows at lambda_best
};

/// k-fold CV over a log grid from lambda_max down the given number of
/// decades, warm-starting along the path. Fold assignment is a seeded
/// shuffle, so the result depends only on (data, options, seed).
LassoCvResult lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k_folds = 5,
                       int grid_points = 50, double decades = 4.0, std::uint64_t seed = 0,
                       const LassoOptions& opts = {});

}  // namespace linkvol::sel
