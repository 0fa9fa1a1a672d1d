#include "linkvol/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace linkvol::eval {

namespace {
void check(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  if (truth.size() == 0) throw std::invalid_argument("metrics: empty vectors");
  if (truth.size() != pred.size()) throw std::invalid_argument("metrics: length mismatch");
  if (!truth.allFinite() || !pred.allFinite()) {
    throw std::invalid_argument("metrics: non-finite values");
  }
}
}  // namespace

double r2(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  check(truth, pred);
  const double mean = truth.mean();
  const double ss_tot = (truth.array() - mean).square().sum();
  if (ss_tot == 0.0) {
    throw std::invalid_argument("r2 undefined: truth vector has zero variance");
  }
  const double ss_res = (truth - pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  check(truth, pred);
  return (truth - pred).cwiseAbs().mean();
}

double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  check(truth, pred);
  return std::sqrt((truth - pred).squaredNorm() / static_cast<double>(truth.size()));
}

Metrics compute_metrics(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  return {r2(truth, pred), mae(truth, pred), rmse(truth, pred)};
}

}  // namespace linkvol::eval
