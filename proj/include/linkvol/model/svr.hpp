#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

namespace linkvol::model {

struct SvrConfig {
  double epsilon = 0.1;  // insensitive-tube half-width, in target units
  double C = 1.0;
  int epochs = 200;
  double lr = 1e-3;
  bool standardized_input = false;
};

// Linear epsilon-insensitive SVR: ½‖w‖² + C·Σ max(0, |y − w·x − b| − ε),
// minimized by stochastic subgradient descent. Each epoch is accepted only
// if the full objective did not increase — otherwise the step is rolled back
// and the learning rate halved — so the recorded trace is non-increasing.
class LinearSvr {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrConfig& cfg,
           std::uint64_t seed);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double epsilon,
                   double C) const;

  bool trained() const { return trained_; }
  const Eigen::VectorXd& weights() const { return w_; }
  double bias() const { return b_; }
  const std::vector<double>& objective_trace() const { return trace_; }

  nlohmann::json to_json() const;
  static LinearSvr from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
  std::vector<double> trace_;
  bool trained_ = false;
};

}  // namespace linkvol::model
