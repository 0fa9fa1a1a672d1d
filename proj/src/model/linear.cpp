#include "linkvol/model/linear.hpp"

#include <stdexcept>

#include "linkvol/sel/lasso.hpp"

namespace linkvol::model {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void OlsModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool with_intercept) {
  if (X.rows() == 0) throw std::invalid_argument("ols: no training rows");
  if (X.rows() != y.size()) throw std::invalid_argument("ols: X/y row mismatch");
  if (with_intercept) {
    Eigen::MatrixXd design(X.rows(), X.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(X.cols()) = X;
    const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(y);
    intercept_ = sol(0);
    coef_ = sol.tail(X.cols());
  } else {
    intercept_ = 0.0;
    coef_ = X.colPivHouseholderQr().solve(y);
  }
  trained_ = true;
}

double OlsModel::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained_) throw std::logic_error("ols: predict before fit");
  return intercept_ + x.dot(coef_);
}

Eigen::VectorXd OlsModel::predict(const Eigen::MatrixXd& X) const {
  if (!trained_) throw std::logic_error("ols: predict before fit");
  return (X * coef_).array() + intercept_;
}

nlohmann::json OlsModel::to_json() const {
  return {{"coef", to_std(coef_)}, {"intercept", intercept_}};
}

OlsModel OlsModel::from_json(const nlohmann::json& j) {
  OlsModel m;
  m.coef_ = to_eigen(j.at("coef").get<std::vector<double>>());
  m.intercept_ = j.at("intercept").get<double>();
  m.trained_ = true;
  return m;
}

double fit_naive_base(const Eigen::VectorXd& third_party, const Eigen::VectorXd& observed) {
  if (third_party.size() != observed.size()) {
    throw std::invalid_argument("naive base: predictor/response length mismatch");
  }
  if (third_party.size() < 2) throw std::invalid_argument("naive base: need >= 2 points");
  const double sxx = third_party.squaredNorm();
  if (sxx == 0.0) {
    throw std::invalid_argument("naive base: predictor is all zero; beta undefined");
  }
  return third_party.dot(observed) / sxx;
}

void NaiveBaseModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         Eigen::Index feature_col, bool with_intercept) {
  if (feature_col < 0 || feature_col >= X.cols()) {
    throw std::invalid_argument("naive base: feature column out of range");
  }
  col_ = feature_col;
  if (with_intercept) {
    OlsModel ols;
    ols.fit(X.col(col_), y, true);
    beta_ = ols.coef()(0);
    intercept_ = ols.intercept();
  } else {
    beta_ = fit_naive_base(X.col(col_), y);
    intercept_ = 0.0;
  }
  trained_ = true;
}

double NaiveBaseModel::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained_) throw std::logic_error("naive base: predict before fit");
  return intercept_ + beta_ * x(col_);
}

Eigen::VectorXd NaiveBaseModel::predict(const Eigen::MatrixXd& X) const {
  if (!trained_) throw std::logic_error("naive base: predict before fit");
  return (beta_ * X.col(col_)).array() + intercept_;
}

nlohmann::json NaiveBaseModel::to_json() const {
  return {{"beta", beta_}, {"intercept", intercept_}, {"feature_col", col_}};
}

NaiveBaseModel NaiveBaseModel::from_json(const nlohmann::json& j) {
  NaiveBaseModel m;
  m.beta_ = j.at("beta").get<double>();
  m.intercept_ = j.at("intercept").get<double>();
  m.col_ = j.at("feature_col").get<Eigen::Index>();
  m.trained_ = true;
  return m;
}

void LassoModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Options& opts,
                     std::uint64_t seed) {
  scaler_ = sel::fit_scaler(X);
  const Eigen::MatrixXd Xs = scaler_.transform(X);
  y_mean_ = y.mean();
  const Eigen::VectorXd yc = y.array() - y_mean_;
  if (opts.lambda >= 0.0) {
    lambda_ = opts.lambda;
    beta_ = sel::lasso_fit(Xs, yc, lambda_).beta;
  } else {
    const sel::LassoCvResult cv =
        sel::lasso_cv(Xs, yc, opts.k_folds, opts.grid_points, opts.decades, seed);
    lambda_ = cv.lambda_best;
    beta_ = cv.fit.beta;
  }
  trained_ = true;
}

double LassoModel::predict_row(const Eigen::RowVectorXd& x) const {
  if (!trained_) throw std::logic_error("lasso: predict before fit");
  double out = y_mean_;
  for (Eigen::Index j = 0; j < beta_.size(); ++j) {
    out += beta_(j) * (x(j) - scaler_.mean(j)) / scaler_.scale(j);
  }
  return out;
}

Eigen::VectorXd LassoModel::predict(const Eigen::MatrixXd& X) const {
  if (!trained_) throw std::logic_error("lasso: predict before fit");
  return (scaler_.transform(X) * beta_).array() + y_mean_;
}

nlohmann::json LassoModel::to_json() const {
  nlohmann::json j;
  j["beta"] = to_std(beta_);
  j["lambda"] = lambda_;
  j["y_mean"] = y_mean_;
  j["scaler_mean"] = to_std(scaler_.mean);
  j["scaler_scale"] = to_std(scaler_.scale);
  j["scaler_constant"] = std::vector<int>(scaler_.constant.begin(), scaler_.constant.end());
  return j;
}

LassoModel LassoModel::from_json(const nlohmann::json& j) {
  LassoModel m;
  m.beta_ = to_eigen(j.at("beta").get<std::vector<double>>());
  m.lambda_ = j.at("lambda").get<double>();
  m.y_mean_ = j.at("y_mean").get<double>();
  m.scaler_.mean = to_eigen(j.at("scaler_mean").get<std::vector<double>>());
  m.scaler_.scale = to_eigen(j.at("scaler_scale").get<std::vector<double>>());
  const auto c = j.at("scaler_constant").get<std::vector<int>>();
  m.scaler_.constant.assign(c.begin(), c.end());
  m.trained_ = true;
  return m;
}

}  // namespace linkvol::model
