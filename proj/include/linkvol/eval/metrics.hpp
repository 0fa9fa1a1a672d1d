#pragma once

#include <Eigen/Dense>

namespace linkvol::eval {

struct Metrics {
  double r2 = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

/// Coefficient of determination, 1 - SSres/SStot. May be negative for models
/// worse than the mean; a zero-variance truth vector is an error.
double r2(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

double mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

Metrics compute_metrics(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

}  // namespace linkvol::eval
