#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

namespace linkvol::model {

struct MlpConfig {
  std::vector<int> hidden = {64};  // tanh layers; empty = plain linear model
  int epochs = 200;
  int batch = 32;
  double lr = 0.01;
  // Training refuses unstandardized inputs unless this is set; the train
  // dispatcher standardizes and sets it automatically.
  bool standardized_input = false;
};

// Feedforward net under squared loss (1/2B)·Σ(ŷ−y)², trained by mini-batch
// gradient descent with a seeded shuffle. Parameters are exposed flat so the
// analytic gradient can be checked against finite differences.
class Mlp {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpConfig& cfg,
           std::uint64_t seed);

  /// Random init without training; for direct gradient probing.
  void init(Eigen::Index n_features, const std::vector<int>& hidden, std::uint64_t seed);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  Eigen::VectorXd get_params() const;
  void set_params(const Eigen::VectorXd& theta);
  Eigen::Index param_count() const;

  double loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const;
  Eigen::VectorXd gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const;

  bool trained() const { return !W_.empty(); }
  const std::vector<double>& epoch_loss() const { return epoch_loss_; }

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  // Layer l maps in -> out via A_out = act(A_in * W^T + b^T); last layer is
  // linear with a single output.
  std::vector<Eigen::MatrixXd> W_;
  std::vector<Eigen::VectorXd> b_;
  std::vector<double> epoch_loss_;
};

}  // namespace linkvol::model
