#pragma once

#include <vector>

#include <Eigen/Dense>

namespace linkvol::sel {

/// Variance inflation factors on unstandardized features, intercept included
/// in each auxiliary regression. Perfect collinearity (including constant
/// columns) is reported as +infinity. Exact computation needs rows > cols;
/// pass ridge > 0 to enable the ridge-stabilized fallback instead.
std::vector<double> vif(const Eigen::MatrixXd& X, double ridge = 0.0);

}  // namespace linkvol::sel
