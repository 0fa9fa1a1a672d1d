#include <stdexcept>

#include "linkvol/common/hash.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/model/train.hpp"

namespace linkvol::model {

using nlohmann::json;

Eigen::VectorXd TrainedModel::predict(const feat::FeatureMatrix& m) const {
  if (m.schema_hash != schema_hash) {
    std::string want, got;
    for (const auto& s : schema) want += (want.empty() ? "" : ",") + s;
    for (const auto& s : m.schema) got += (got.empty() ? "" : ",") + s;
    throw std::invalid_argument("predict: feature schema mismatch (model trained on [" + want +
                                "], matrix has [" + got + "])");
  }
  return predict_raw(m.X);
}

Eigen::VectorXd TrainedModel::predict_raw(const Eigen::MatrixXd& X) const {
  if (!impl) throw std::logic_error("predict: model has no trained learner");
  if (X.cols() != static_cast<Eigen::Index>(schema.size())) {
    throw std::invalid_argument("predict: expected " + std::to_string(schema.size()) +
                                " feature columns, got " + std::to_string(X.cols()));
  }
  return impl->predict(X);
}

std::string TrainedModel::to_json() const {
  if (!impl) throw std::logic_error("serialize: model has no trained learner");
  json j;
  j["format_version"] = 1;
  j["family"] = family;
  j["config"] = config;
  j["seed"] = seed;
  j["schema"] = schema;
  j["schema_hash"] = to_hex(schema_hash);
  j["training_metrics"] = {{"r2", training_metrics.r2},
                           {"mae", training_metrics.mae},
                           {"rmse", training_metrics.rmse}};
  j["diagnostics"] = diagnostics;
  j["params"] = impl->params_json();
  return j.dump(2);
}

TrainedModel TrainedModel::from_json(const std::string& bytes) {
  const json j = json::parse(bytes);
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("model file: unsupported format_version");
  }
  TrainedModel m;
  m.family = j.at("family").get<std::string>();
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.schema = j.at("schema").get<std::vector<std::string>>();
  m.schema_hash = std::stoull(j.at("schema_hash").get<std::string>(), nullptr, 16);
  const auto& tm = j.at("training_metrics");
  m.training_metrics.r2 = tm.at("r2").get<double>();
  m.training_metrics.mae = tm.at("mae").get<double>();
  m.training_metrics.rmse = tm.at("rmse").get<double>();
  m.diagnostics = j.at("diagnostics");
  m.impl = learner_from_json(m.family, j.at("params"));
  return m;
}

void TrainedModel::save(const std::string& path) const { write_file_bytes(path, to_json()); }

TrainedModel TrainedModel::load(const std::string& path) {
  return from_json(read_file_bytes(path));
}

}  // namespace linkvol::model
