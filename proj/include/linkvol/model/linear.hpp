#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include <json.hpp>

#include "linkvol/sel/standardize.hpp"

namespace linkvol::model {

// Ordinary least squares via column-pivoted QR.
class OlsModel {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool with_intercept = true);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return trained_; }
  const Eigen::VectorXd& coef() const { return coef_; }
  double intercept() const { return intercept_; }

  nlohmann::json to_json() const;
  static OlsModel from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd coef_;
  double intercept_ = 0.0;
  bool trained_ = false;
};

/// Through-origin least squares on a single predictor: beta = Σxy / Σx².
/// Throws when the predictor is all zero or the vectors are too short.
double fit_naive_base(const Eigen::VectorXd& third_party, const Eigen::VectorXd& observed);

// The naive base model: observed ≈ beta · third_party, reading one column of
// the feature matrix. An intercept variant hides behind with_intercept.
class NaiveBaseModel {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index feature_col,
           bool with_intercept = false);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return trained_; }
  double beta() const { return beta_; }
  double intercept() const { return intercept_; }
  Eigen::Index feature_col() const { return col_; }

  nlohmann::json to_json() const;
  static NaiveBaseModel from_json(const nlohmann::json& j);

 private:
  double beta_ = 0.0;
  double intercept_ = 0.0;
  Eigen::Index col_ = 0;
  bool trained_ = false;
};

// Predictive wrapper over the lasso path: standardizes internally, picks
// lambda by CV, and restores the target mean at prediction time.
class LassoModel {
 public:
  struct Options {
    int k_folds = 5;
    int grid_points = 50;
    double decades = 4.0;
    double lambda = -1.0;  // >= 0 pins lambda and skips CV
  };

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Options& opts,
           std::uint64_t seed);

  double predict_row(const Eigen::RowVectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  bool trained() const { return trained_; }
  double lambda() const { return lambda_; }
  const Eigen::VectorXd& beta() const { return beta_; }

  nlohmann::json to_json() const;
  static LassoModel from_json(const nlohmann::json& j);

 private:
  sel::Scaler scaler_;
  Eigen::VectorXd beta_;
  double y_mean_ = 0.0;
  double lambda_ = 0.0;
  bool trained_ = false;
};

}  // namespace linkvol::model
