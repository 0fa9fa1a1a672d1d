#include "linkvol/sel/standardize.hpp"

#include <cmath>
#include <stdexcept>

namespace linkvol::sel {

Scaler fit_scaler(const Eigen::MatrixXd& X) {
  if (X.rows() == 0) throw std::invalid_argument("cannot fit scaler on an empty matrix");
  Scaler s;
  const auto n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.scale.resize(X.cols());
  s.constant.assign(static_cast<std::size_t>(X.cols()), 0);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      s.scale(j) = sd;
    } else {
      s.scale(j) = 1.0;
      s.constant[static_cast<std::size_t>(j)] = 1;
    }
  }
  return s;
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw std::invalid_argument("scaler/matrix width mismatch");
  Eigen::MatrixXd out = X;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

Eigen::MatrixXd Scaler::inverse(const Eigen::MatrixXd& Xs) const {
  if (Xs.cols() != mean.size()) throw std::invalid_argument("scaler/matrix width mismatch");
  Eigen::MatrixXd out = Xs;
  out.array().rowwise() *= scale.transpose().array();
  out.rowwise() += mean.transpose();
  return out;
}

}  // namespace linkvol::sel
