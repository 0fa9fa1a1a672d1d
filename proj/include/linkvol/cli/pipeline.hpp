#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "linkvol/data/records.hpp"
#include "linkvol/infer/infer.hpp"
#include "linkvol/model/train.hpp"
#include "linkvol/synth/synth.hpp"

namespace linkvol::cli {

// Everything a run needs, from one structured config file. CLI flags override
// seed / mode / strategy / threads after loading.
struct RunConfig {
  // Input files. Empty paths resolve to the synth stage's outputs under
  // out_dir/synth, which is the golden path for generated worlds.
  std::string links_path, zones_path, lgas_path, station_sites_path, station_obs_path,
      counts_path, third_party_path;

  data::Mode mode = data::Mode::walk;

  // "auto" picks the per-mode final set; otherwise a named set or an
  // explicit feature list.
  std::string feature_set = "auto";
  std::vector<std::string> feature_list;

  std::vector<model::ModelSpec> families;  // benchmark row set; empty = all
  model::ModelSpec model{"stacking", nlohmann::json::object()};  // production model

  double test_fraction = 0.2;
  int k_folds = 10;
  int selection_folds = 5;

  std::string strategy = "cap";  // or "fallback"
  std::optional<double> elbow_override;

  std::optional<infer::AggregationParams> aggregation;  // default by mode

  synth::SynthConfig synth;

  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;

  static RunConfig load(const std::string& path);
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Throws unless the config is runnable: seed set, fractions sane,
  /// explicitly-given input paths existing.
  void validate() const;

  // Resolved values.
  std::vector<std::string> resolved_features() const;
  std::vector<model::ModelSpec> resolved_families() const;
  infer::AggregationParams resolved_aggregation() const;
  bool inputs_from_synth() const;
  std::string input_path(const std::string& name) const;  // links|zones|...
};

const std::vector<std::string>& stage_names();  // pipeline order

struct StageResult {
  std::string stage;
  bool skipped = false;  // manifest showed it up to date
};

/// Runs stages against one output directory. Every stage writes a manifest
/// (config digest, input/output digests, seed); a stage whose manifest still
/// matches is skipped, and a stage whose upstream manifests are stale or
/// missing refuses to run (unless force). A lock file serializes runs per
/// output directory.
class Pipeline {
 public:
  Pipeline(RunConfig config, bool force = false);

  StageResult run_stage(const std::string& stage);
  std::vector<StageResult> run_all();

  const RunConfig& config() const { return cfg_; }

 private:
  StageResult execute(const std::string& stage);

  std::vector<std::string> stage_deps(const std::string& stage) const;
  std::vector<std::string> stage_inputs(const std::string& stage) const;
  nlohmann::json stage_config(const std::string& stage) const;
  std::string manifest_path(const std::string& stage) const;
  void check_dependency(const std::string& stage, const std::string& dep) const;

  std::vector<std::string> run_synth();
  std::vector<std::string> run_ingest();
  std::vector<std::string> run_featurize();
  std::vector<std::string> run_select();
  std::vector<std::string> run_train();
  std::vector<std::string> run_evaluate();
  std::vector<std::string> run_infer();
  std::vector<std::string> run_aggregate();
  std::vector<std::string> run_report();

  RunConfig cfg_;
  bool force_ = false;
};

}  // namespace linkvol::cli
