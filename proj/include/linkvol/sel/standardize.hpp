#pragma once

#include <vector>

#include <Eigen/Dense>

namespace linkvol::sel {

// Per-feature centering/scaling. Constant features are flagged and mapped to
// zero (scale kept at 1) so downstream solvers never divide by zero.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;        // population std; 1 for constant features
  std::vector<char> constant;   // per-feature flag

  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& Xs) const;
};

Scaler fit_scaler(const Eigen::MatrixXd& X);

}  // namespace linkvol::sel
