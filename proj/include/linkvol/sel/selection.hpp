#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linkvol/feat/featurize.hpp"
#include "linkvol/sel/lasso.hpp"

namespace linkvol::sel {

struct FeatureRecord {
  std::string name;
  double lasso_abs = 0.0;  // |beta| on standardized features
  double vif = 1.0;        // +inf marks perfect collinearity
  std::optional<double> gini;
};

// Importance/multicollinearity screen over one feature matrix: records are
// ranked by descending |LASSO| coefficient, ties alphabetical.
struct SelectionReport {
  std::vector<FeatureRecord> records;
  double lambda_used = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> cv_mse_mean;
  bool lasso_converged = false;
  int lasso_sweeps = 0;
  std::vector<std::string> constant_features;

  std::string to_csv() const;   // feature,lasso,vif,gini
  std::string to_json() const;  // lambda grid + convergence sidecar
};

/// gini, when given, maps feature name -> fraction (normalized importances
/// from a fitted forest); features absent from the map report no GINI.
SelectionReport build_selection_report(const feat::FeatureMatrix& m, int k_folds = 5,
                                       std::uint64_t seed = 0,
                                       const std::map<std::string, double>* gini = nullptr);

}  // namespace linkvol::sel
