#include "linkvol/sel/vif.hpp"

#include <limits>
#include <stdexcept>

namespace linkvol::sel {

std::vector<double> vif(const Eigen::MatrixXd& X, double ridge) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (p < 2) throw std::invalid_argument("vif: need >= 2 features");
  if (!X.allFinite()) throw std::invalid_argument("vif: non-finite values");
  if (ridge == 0.0 && n <= p) {
    throw std::invalid_argument(
        "vif: need more rows than features for exact computation; the "
        "ridge-stabilized fallback (ridge > 0) is off by default");
  }
  if (ridge < 0.0) throw std::invalid_argument("vif: ridge must be >= 0");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> out(static_cast<std::size_t>(p));
  Eigen::MatrixXd design(n, p);  // intercept + all-but-one feature
  design.col(0).setOnes();
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::Index k = 1;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (c != j) design.col(k++) = X.col(c);
    }
    const Eigen::VectorXd target = X.col(j);
    const double mean = target.mean();
    const double ss_tot = (target.array() - mean).square().sum();
    if (ss_tot == 0.0) {
      out[static_cast<std::size_t>(j)] = kInf;  // constant feature
      continue;
    }
    Eigen::VectorXd coef;
    if (ridge > 0.0) {
      Eigen::MatrixXd gram = design.transpose() * design;
      gram.diagonal().tail(p - 1).array() += ridge;  // intercept unpenalized
      coef = gram.ldlt().solve(design.transpose() * target);
    } else {
      coef = design.colPivHouseholderQr().solve(target);
    }
    const double ss_res = (target - design * coef).squaredNorm();
    const double r2 = 1.0 - ss_res / ss_tot;
    if (r2 >= 1.0 - 1e-12) {
      out[static_cast<std::size_t>(j)] = kInf;
    } else {
      out[static_cast<std::size_t>(j)] = std::max(1.0, 1.0 / (1.0 - r2));
    }
  }
  return out;
}

}  // namespace linkvol::sel
