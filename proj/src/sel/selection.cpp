#include "linkvol/sel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "linkvol/common/io.hpp"
#include "linkvol/sel/standardize.hpp"
#include "linkvol/sel/vif.hpp"

namespace linkvol::sel {

SelectionReport build_selection_report(const feat::FeatureMatrix& m, int k_folds,
                                       std::uint64_t seed,
                                       const std::map<std::string, double>* gini) {
  if (!m.has_target) throw std::invalid_argument("selection needs a matrix with a target");
  if (m.rows() == 0) throw std::invalid_argument("selection needs at least one row");

  const Scaler scaler = fit_scaler(m.X);
  const Eigen::MatrixXd Xs = scaler.transform(m.X);
  const LassoCvResult cv = lasso_cv(Xs, m.y, k_folds, 50, 4.0, seed);
  const std::vector<double> vifs = vif(m.X);

  SelectionReport rep;
  rep.lambda_used = cv.lambda_best;
  rep.lambda_grid = cv.lambda_grid;
  rep.cv_mse_mean = cv.cv_mse_mean;
  rep.lasso_converged = cv.fit.converged;
  rep.lasso_sweeps = cv.fit.sweeps;
  for (std::size_t j = 0; j < m.schema.size(); ++j) {
    FeatureRecord rec;
    rec.name = m.schema[j];
    rec.lasso_abs = std::abs(cv.fit.beta(static_cast<Eigen::Index>(j)));
    rec.vif = vifs[j];
    if (gini) {
      const auto it = gini->find(rec.name);
      if (it != gini->end()) rec.gini = it->second;
    }
    if (scaler.constant[j]) rep.constant_features.push_back(rec.name);
    rep.records.push_back(std::move(rec));
  }
  std::sort(rep.records.begin(), rep.records.end(),
            [](const FeatureRecord& a, const FeatureRecord& b) {
              if (a.lasso_abs != b.lasso_abs) return a.lasso_abs > b.lasso_abs;
              return a.name < b.name;
            });
  return rep;
}

std::string SelectionReport::to_csv() const {
  CsvWriter w({"feature", "lasso", "vif", "gini"});
  for (const auto& r : records) {
    w.field(r.name);
    w.field(r.lasso_abs);
    if (std::isinf(r.vif))
      w.field(std::string("inf"));
    else
      w.field(r.vif);
    if (r.gini)
      w.field(*r.gini);
    else
      w.field(std::string{});
    w.end_row();
  }
  return w.str();
}

std::string SelectionReport::to_json() const {
  nlohmann::ordered_json j;
  j["lambda_used"] = lambda_used;
  j["lambda_grid"] = lambda_grid;
  j["cv_mse_mean"] = cv_mse_mean;
  j["lasso_converged"] = lasso_converged;
  j["lasso_sweeps"] = lasso_sweeps;
  j["constant_features"] = constant_features;
  return j.dump(2) + "\n";
}

}  // namespace linkvol::sel
