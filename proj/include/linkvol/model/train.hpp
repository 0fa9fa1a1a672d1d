#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "linkvol/eval/metrics.hpp"
#include "linkvol/feat/featurize.hpp"

namespace linkvol::model {

/// The learner families behind the uniform train/predict interface.
const std::vector<std::string>& model_families();

// What to train: a family plus family-specific parameters. Ensemble params
// may hold nested specs under "members" (voting) or "bases" (stacking).
struct ModelSpec {
  std::string family = "ols";
  nlohmann::json params = nlohmann::json::object();

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

// Type-erased trained learner. predict() takes raw (unscaled) features; any
// internal standardization (MLP, SVR) is part of the learner's own state.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string family() const = 0;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
  virtual nlohmann::json params_json() const = 0;
};

/// Trains one learner on raw features. `resolved` (optional) receives the
/// fully-resolved config including defaults; `diagnostics` receives loss
/// traces and fit notes. Deterministic in (X, y, spec, seed) — thread count
/// never changes results.
std::unique_ptr<Learner> train_learner(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       const ModelSpec& spec, std::uint64_t seed,
                                       int threads = 1, nlohmann::json* resolved = nullptr,
                                       nlohmann::json* diagnostics = nullptr);

/// Rebuilds a learner from its serialized family + params payload.
std::unique_ptr<Learner> learner_from_json(const std::string& family,
                                           const nlohmann::json& params);

/// Fills in matrix-dependent parameters: the naive base model's predictor
/// column is looked up by feature name (default third_party_count).
ModelSpec resolve_spec(const ModelSpec& spec, const feat::FeatureMatrix& m);

// A trained model plus everything needed to audit and reuse it: resolved
// config, seed, schema fingerprint, training metrics, diagnostics.
struct TrainedModel {
  std::string family;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> schema;
  std::uint64_t schema_hash = 0;
  eval::Metrics training_metrics;
  nlohmann::json diagnostics;
  std::shared_ptr<const Learner> impl;

  /// Rejects matrices whose schema digest differs from training.
  Eigen::VectorXd predict(const feat::FeatureMatrix& m) const;

  /// Trusted path for fold sub-matrices that share the training schema.
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& X) const;

  std::string to_json() const;
  static TrainedModel from_json(const std::string& bytes);
  void save(const std::string& path) const;
  static TrainedModel load(const std::string& path);
};

TrainedModel train_model(const feat::FeatureMatrix& m, const ModelSpec& spec,
                         std::uint64_t seed, int threads = 1);

}  // namespace linkvol::model
