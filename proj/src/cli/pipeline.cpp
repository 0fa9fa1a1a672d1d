#include "linkvol/cli/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "linkvol/common/hash.hpp"
#include "linkvol/common/io.hpp"
#include "linkvol/common/rng.hpp"
#include "linkvol/data/loaders.hpp"
#include "linkvol/data/writers.hpp"
#include "linkvol/eval/benchmark.hpp"
#include "linkvol/eval/folds.hpp"
#include "linkvol/feat/featurize.hpp"
#include "linkvol/model/forest.hpp"
#include "linkvol/sel/selection.hpp"

namespace linkvol::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string digest_json(const json& j) { return to_hex(fnv1a64(j.dump())); }

// One run per output directory; the lock file vanishes with the run.
class DirLock {
 public:
  explicit DirLock(const std::string& dir) : path_(dir + "/.lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw std::runtime_error("another run holds '" + path_ +
                               "'; remove it if no run is active");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirLock() { ::unlink(path_.c_str()); }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
};

struct Manifest {
  std::string stage;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest

  json to_json() const {
    json j;
    j["format_version"] = 1;
    j["stage"] = stage;
    j["seed"] = seed;
    j["config_digest"] = config_digest;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
  }
  static Manifest from_json(const json& j) {
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    return m;
  }
};

std::map<std::string, std::string> digest_files(const std::vector<std::string>& paths,
                                                const std::string& stage) {
  std::map<std::string, std::string> out;
  for (const auto& p : paths) {
    if (!fs::exists(p)) {
      throw std::runtime_error(stage + ": missing input file '" + p + "'");
    }
    out[p] = digest_file(p);
  }
  return out;
}

bool files_match(const std::map<std::string, std::string>& recorded, std::string* why) {
  for (const auto& [path, digest] : recorded) {
    if (!fs::exists(path)) {
      if (why) *why = "file '" + path + "' is gone";
      return false;
    }
    if (digest_file(path) != digest) {
      if (why) *why = "file '" + path + "' changed";
      return false;
    }
  }
  return true;
}

}  // namespace

// ---- RunConfig --------------------------------------------------------------

RunConfig RunConfig::load(const std::string& path) {
  return from_json(json::parse(read_file_bytes(path)));
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  if (j.contains("inputs")) {
    const auto& in = j.at("inputs");
    if (in.contains("links")) c.links_path = in.at("links").get<std::string>();
    if (in.contains("zones")) c.zones_path = in.at("zones").get<std::string>();
    if (in.contains("lgas")) c.lgas_path = in.at("lgas").get<std::string>();
    if (in.contains("station_sites")) {
      c.station_sites_path = in.at("station_sites").get<std::string>();
    }
    if (in.contains("station_obs")) c.station_obs_path = in.at("station_obs").get<std::string>();
    if (in.contains("counts")) c.counts_path = in.at("counts").get<std::string>();
    if (in.contains("third_party")) c.third_party_path = in.at("third_party").get<std::string>();
  }
  if (j.contains("mode")) c.mode = data::parse_mode(j.at("mode").get<std::string>());
  if (j.contains("features")) {
    const auto& f = j.at("features");
    if (f.contains("set")) c.feature_set = f.at("set").get<std::string>();
    if (f.contains("list")) c.feature_list = f.at("list").get<std::vector<std::string>>();
  }
  if (j.contains("families")) {
    for (const auto& fj : j.at("families")) {
      c.families.push_back(model::ModelSpec::from_json(fj));
    }
  }
  if (j.contains("model")) c.model = model::ModelSpec::from_json(j.at("model"));
  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (s.contains("test_fraction")) c.test_fraction = s.at("test_fraction").get<double>();
    if (s.contains("k")) c.k_folds = s.at("k").get<int>();
    if (s.contains("selection_folds")) c.selection_folds = s.at("selection_folds").get<int>();
  }
  if (j.contains("mitigation")) {
    const auto& mj = j.at("mitigation");
    if (mj.contains("strategy")) c.strategy = mj.at("strategy").get<std::string>();
    if (mj.contains("elbow") && !mj.at("elbow").is_null()) {
      c.elbow_override = mj.at("elbow").get<double>();
    }
  }
  if (j.contains("aggregation")) {
    const auto& aj = j.at("aggregation");
    infer::AggregationParams p;
    p.d = aj.at("d").get<double>();
    p.gamma = aj.at("gamma").get<double>();
    c.aggregation = p;
  }
  if (j.contains("synth")) c.synth = synth::SynthConfig::from_json(j.at("synth"));
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("seed")) {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.seed_set = true;
  }
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

json RunConfig::to_json() const {
  json j;
  json in;
  in["links"] = links_path;
  in["zones"] = zones_path;
  in["lgas"] = lgas_path;
  in["station_sites"] = station_sites_path;
  in["station_obs"] = station_obs_path;
  in["counts"] = counts_path;
  in["third_party"] = third_party_path;
  j["inputs"] = in;
  j["mode"] = data::to_string(mode);
  j["features"] = {{"set", feature_set}, {"list", feature_list}};
  json fams = json::array();
  for (const auto& f : families) fams.push_back(f.to_json());
  j["families"] = fams;
  j["model"] = model.to_json();
  j["split"] = {{"test_fraction", test_fraction},
                {"k", k_folds},
                {"selection_folds", selection_folds}};
  j["mitigation"] = {{"strategy", strategy},
                     {"elbow", elbow_override ? json(*elbow_override) : json()}};
  if (aggregation) j["aggregation"] = {{"d", aggregation->d}, {"gamma", aggregation->gamma}};
  j["synth"] = synth.to_json();
  j["out_dir"] = out_dir;
  if (seed_set) j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

void RunConfig::validate() const {
  if (!seed_set) throw std::invalid_argument("config: a seed is required (set it or pass --seed)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("config: test_fraction must lie in (0, 1)");
  }
  if (k_folds < 2) throw std::invalid_argument("config: k must be >= 2");
  if (selection_folds < 2) throw std::invalid_argument("config: selection_folds must be >= 2");
  infer::parse_strategy(strategy);
  if (feature_list.empty() && feature_set != "auto") {
    feat::named_feature_set(feature_set);  // throws on unknown names
  }
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  for (const auto& p : {links_path, zones_path, lgas_path, station_sites_path, station_obs_path,
                        counts_path, third_party_path}) {
    if (!p.empty() && !fs::exists(p)) {
      throw std::invalid_argument("config: input path '" + p + "' does not exist");
    }
  }
}

std::vector<std::string> RunConfig::resolved_features() const {
  if (!feature_list.empty()) return feature_list;
  if (feature_set == "auto") {
    return feat::named_feature_set(mode == data::Mode::walk ? "walk_final" : "cycle_final");
  }
  return feat::named_feature_set(feature_set);
}

std::vector<model::ModelSpec> RunConfig::resolved_families() const {
  if (!families.empty()) return families;
  std::vector<model::ModelSpec> out;
  for (const auto& f : model::model_families()) out.push_back({f, json::object()});
  return out;
}

infer::AggregationParams RunConfig::resolved_aggregation() const {
  return aggregation ? *aggregation : infer::default_aggregation_params(mode);
}

bool RunConfig::inputs_from_synth() const {
  return links_path.empty() || zones_path.empty() || lgas_path.empty() ||
         station_sites_path.empty() || station_obs_path.empty() || counts_path.empty() ||
         third_party_path.empty();
}

std::string RunConfig::input_path(const std::string& name) const {
  const std::string synth_dir = out_dir + "/synth/";
  if (name == "links") return links_path.empty() ? synth_dir + "links.geojson" : links_path;
  if (name == "zones") return zones_path.empty() ? synth_dir + "zones.csv" : zones_path;
  if (name == "lgas") return lgas_path.empty() ? synth_dir + "lgas.csv" : lgas_path;
  if (name == "station_sites") {
    return station_sites_path.empty() ? synth_dir + "station_sites.csv" : station_sites_path;
  }
  if (name == "station_obs") {
    return station_obs_path.empty() ? synth_dir + "station_obs.csv" : station_obs_path;
  }
  if (name == "counts") return counts_path.empty() ? synth_dir + "counts.csv" : counts_path;
  if (name == "third_party") {
    return third_party_path.empty() ? synth_dir + "third_party.csv" : third_party_path;
  }
  throw std::logic_error("unknown input '" + name + "'");
}

// ---- Pipeline ----------------------------------------------------------------

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth",    "ingest", "featurize",
                                                 "select",   "train",  "evaluate",
                                                 "infer",    "aggregate", "report"};
  return names;
}

Pipeline::Pipeline(RunConfig config, bool force) : cfg_(std::move(config)), force_(force) {
  cfg_.validate();
}

std::string Pipeline::manifest_path(const std::string& stage) const {
  return cfg_.out_dir + "/" + stage + "/manifest.json";
}

std::vector<std::string> Pipeline::stage_deps(const std::string& stage) const {
  if (stage == "synth") return {};
  if (stage == "ingest") return cfg_.inputs_from_synth() ? std::vector<std::string>{"synth"}
                                                         : std::vector<std::string>{};
  if (stage == "featurize") return {"ingest"};
  if (stage == "select") return {"featurize"};
  if (stage == "train") return {"featurize", "select"};
  if (stage == "evaluate") return {"featurize", "select"};
  if (stage == "infer") return {"featurize", "select", "train"};
  if (stage == "aggregate") return {"ingest", "infer"};
  if (stage == "report") {
    return {"ingest", "featurize", "select", "train", "evaluate", "infer", "aggregate"};
  }
  throw std::invalid_argument("unknown stage '" + stage + "'");
}

std::vector<std::string> Pipeline::stage_inputs(const std::string& stage) const {
  const std::string& out = cfg_.out_dir;
  const std::string ingest = out + "/ingest";
  const std::string featurize = out + "/featurize";
  const std::string select = out + "/select";
  const std::string models = out + "/models";
  const std::string reports = out + "/reports";
  if (stage == "synth") return {};
  if (stage == "ingest") {
    std::vector<std::string> in;
    for (const char* n :
         {"links", "zones", "lgas", "station_sites", "station_obs", "counts", "third_party"}) {
      in.push_back(cfg_.input_path(n));
    }
    return in;
  }
  if (stage == "featurize") {
    return {ingest + "/links.geojson",   ingest + "/zones.csv",       ingest + "/lgas.csv",
            ingest + "/station_sites.csv", ingest + "/station_obs.csv", ingest + "/counts.csv",
            ingest + "/third_party.csv"};
  }
  if (stage == "select") return {featurize + "/train_matrix.csv"};
  if (stage == "train") return {featurize + "/train_matrix.csv", select + "/features.json"};
  if (stage == "evaluate") return {featurize + "/train_matrix.csv", select + "/features.json"};
  if (stage == "infer") {
    return {featurize + "/infer_matrix.csv", select + "/features.json", models + "/model.json",
            out + "/train/training_report.json"};
  }
  if (stage == "aggregate") return {out + "/infer/results.csv", ingest + "/links.geojson"};
  if (stage == "report") {
    std::vector<std::string> in = {
        ingest + "/ingest_report.json",     featurize + "/featurize_report.json",
        select + "/selection.json",         out + "/train/training_report.json",
        reports + "/benchmark_metrics.csv", out + "/infer/infer_report.json",
        out + "/infer/results.csv",         reports + "/aggregation.json"};
    return in;
  }
  throw std::invalid_argument("unknown stage '" + stage + "'");
}

json Pipeline::stage_config(const std::string& stage) const {
  json j;
  j["stage"] = stage;
  j["seed"] = cfg_.seed;
  j["mode"] = data::to_string(cfg_.mode);
  if (stage == "synth") {
    synth::SynthConfig sc = cfg_.synth;
    sc.seed = cfg_.seed;
    sc.mode = cfg_.mode;
    j["synth"] = sc.to_json();
  } else if (stage == "ingest") {
    json paths = json::array();
    for (const char* n :
         {"links", "zones", "lgas", "station_sites", "station_obs", "counts", "third_party"}) {
      paths.push_back(cfg_.input_path(n));
    }
    j["paths"] = paths;
  } else if (stage == "select") {
    j["candidates"] = cfg_.mode == data::Mode::walk ? "walk_full" : "cycle_full";
    j["selection_folds"] = cfg_.selection_folds;
  } else if (stage == "train") {
    j["model"] = cfg_.model.to_json();
  } else if (stage == "evaluate") {
    json fams = json::array();
    for (const auto& f : cfg_.resolved_families()) fams.push_back(f.to_json());
    j["families"] = fams;
    j["test_fraction"] = cfg_.test_fraction;
    j["k"] = cfg_.k_folds;
  } else if (stage == "infer") {
    j["strategy"] = cfg_.strategy;
    j["elbow_override"] = cfg_.elbow_override ? json(*cfg_.elbow_override) : json();
  } else if (stage == "aggregate") {
    const auto p = cfg_.resolved_aggregation();
    j["aggregation"] = {{"d", p.d}, {"gamma", p.gamma}};
  }
  // featurize and report carry no extra knobs beyond mode + seed.
  return j;
}

void Pipeline::check_dependency(const std::string& stage, const std::string& dep) const {
  const std::string mpath = manifest_path(dep);
  if (!fs::exists(mpath)) {
    throw std::runtime_error(stage + ": missing manifest '" + mpath + "' — run the '" + dep +
                             "' stage first");
  }
  const Manifest m = Manifest::from_json(json::parse(read_file_bytes(mpath)));
  std::string why;
  bool stale = false;
  if (m.config_digest != digest_json(stage_config(dep))) {
    stale = true;
    why = "its configuration changed";
  } else if (!files_match(m.inputs, &why) || !files_match(m.outputs, &why)) {
    stale = true;
  }
  if (stale && !force_) {
    throw std::runtime_error(stage + ": stale manifest for '" + dep + "' (" + why +
                             "); rerun that stage or pass --force");
  }
}

StageResult Pipeline::run_stage(const std::string& stage) {
  fs::create_directories(cfg_.out_dir);
  DirLock lock(cfg_.out_dir);
  return execute(stage);
}

std::vector<StageResult> Pipeline::run_all() {
  fs::create_directories(cfg_.out_dir);
  DirLock lock(cfg_.out_dir);
  std::vector<StageResult> results;
  for (const auto& stage : stage_names()) {
    if (stage == "synth" && !cfg_.inputs_from_synth()) continue;
    results.push_back(execute(stage));
  }
  return results;
}

StageResult Pipeline::execute(const std::string& stage) {
  for (const auto& dep : stage_deps(stage)) check_dependency(stage, dep);

  const json config = stage_config(stage);
  const std::string config_digest = digest_json(config);
  const auto inputs = digest_files(stage_inputs(stage), stage);

  const std::string mpath = manifest_path(stage);
  if (fs::exists(mpath)) {
    const Manifest old = Manifest::from_json(json::parse(read_file_bytes(mpath)));
    if (old.config_digest == config_digest && old.inputs == inputs &&
        files_match(old.outputs, nullptr)) {
      return {stage, true};  // up to date
    }
  }

  std::vector<std::string> outputs;
  if (stage == "synth") outputs = run_synth();
  else if (stage == "ingest") outputs = run_ingest();
  else if (stage == "featurize") outputs = run_featurize();
  else if (stage == "select") outputs = run_select();
  else if (stage == "train") outputs = run_train();
  else if (stage == "evaluate") outputs = run_evaluate();
  else if (stage == "infer") outputs = run_infer();
  else if (stage == "aggregate") outputs = run_aggregate();
  else if (stage == "report") outputs = run_report();
  else throw std::invalid_argument("unknown stage '" + stage + "'");

  Manifest m;
  m.stage = stage;
  m.seed = cfg_.seed;
  m.config_digest = config_digest;
  m.inputs = inputs;
  m.outputs = digest_files(outputs, stage);
  fs::create_directories(fs::path(mpath).parent_path());
  write_file_bytes(mpath, m.to_json().dump(2) + "\n");
  return {stage, false};
}

// ---- stage bodies -------------------------------------------------------------

std::vector<std::string> Pipeline::run_synth() {
  synth::SynthConfig sc = cfg_.synth;
  sc.seed = cfg_.seed;
  sc.mode = cfg_.mode;
  const auto world = synth::generate_world(sc);
  const std::string dir = cfg_.out_dir + "/synth";
  synth::write_bundle(world, dir);
  return {dir + "/links.geojson",      dir + "/zones.csv",
          dir + "/lgas.csv",           dir + "/station_sites.csv",
          dir + "/station_obs.csv",    dir + "/counts.csv",
          dir + "/third_party.csv",    dir + "/truth/volumes.csv",
          dir + "/truth/extreme_links.csv", dir + "/truth/meta.json",
          dir + "/synth_manifest.json"};
}

std::vector<std::string> Pipeline::run_ingest() {
  const std::string dir = cfg_.out_dir + "/ingest";
  fs::create_directories(dir);

  const auto links = data::load_links(cfg_.input_path("links"), cfg_.mode);
  const auto zones = data::load_zones(cfg_.input_path("zones"));
  const auto lgas = data::load_lgas(cfg_.input_path("lgas"));
  const auto sites = data::load_station_sites(cfg_.input_path("station_sites"));
  data::LoadReport obs_rep, count_rep;
  const auto obs = data::load_station_obs(cfg_.input_path("station_obs"), sites, &obs_rep);
  const auto counts = data::load_counts(cfg_.input_path("counts"), cfg_.mode, &count_rep);
  const auto third_party = data::load_third_party(cfg_.input_path("third_party"), cfg_.mode);

  data::write_links_geojson(dir + "/links.geojson", links);
  data::write_zones_csv(dir + "/zones.csv", zones);
  data::write_lgas_csv(dir + "/lgas.csv", lgas);
  data::write_station_sites_csv(dir + "/station_sites.csv", sites);
  data::write_station_obs_csv(dir + "/station_obs.csv", obs);
  data::write_counts_csv(dir + "/counts.csv", counts);
  data::write_third_party_csv(dir + "/third_party.csv", third_party);

  json rep;
  rep["format_version"] = 1;
  rep["mode"] = data::to_string(cfg_.mode);
  rep["links"] = links.size();
  rep["zones"] = zones.size();
  rep["lgas"] = lgas.size();
  rep["stations"] = sites.size();
  rep["station_obs"] = {{"rows_in", obs_rep.rows_in},
                        {"accepted", obs_rep.accepted},
                        {"rejected", obs_rep.rejected},
                        {"negative_pollutant_flags", obs_rep.negative_pollutant_flags}};
  rep["counts"] = {{"rows_in", count_rep.rows_in},
                   {"accepted", count_rep.accepted},
                   {"rejected", count_rep.rejected},
                   {"skipped_other_mode", count_rep.skipped_other_mode}};
  rep["third_party_rows"] = third_party.size();

  std::vector<double> tp_values, count_values;
  for (const auto& t : third_party) tp_values.push_back(t.count);
  for (const auto& c : counts) count_values.push_back(c.observed_count);
  const auto stats_json = [](const data::DescriptiveStats& s) {
    return json{{"min", s.min}, {"mean", s.mean}, {"median", s.median},
                {"max", s.max}, {"std_population", s.std}};
  };
  json stats;
  if (!tp_values.empty()) stats["third_party_count"] = stats_json(data::descriptive_stats(tp_values));
  if (!count_values.empty()) {
    stats["observed_count"] = stats_json(data::descriptive_stats(count_values));
  }
  rep["stats"] = stats;
  write_file_bytes(dir + "/ingest_report.json", rep.dump(2) + "\n");

  return {dir + "/links.geojson",     dir + "/zones.csv",   dir + "/lgas.csv",
          dir + "/station_sites.csv", dir + "/station_obs.csv", dir + "/counts.csv",
          dir + "/third_party.csv",   dir + "/ingest_report.json"};
}

std::vector<std::string> Pipeline::run_featurize() {
  const std::string ingest = cfg_.out_dir + "/ingest";
  const std::string dir = cfg_.out_dir + "/featurize";
  fs::create_directories(dir);

  const auto links = data::load_links(ingest + "/links.geojson", cfg_.mode);
  const auto zones = data::load_zones(ingest + "/zones.csv");
  const auto lgas = data::load_lgas(ingest + "/lgas.csv");
  const auto sites = data::load_station_sites(ingest + "/station_sites.csv");
  const auto obs = data::load_station_obs(ingest + "/station_obs.csv", sites);
  const auto counts = data::load_counts(ingest + "/counts.csv", cfg_.mode);
  const auto third_party = data::load_third_party(ingest + "/third_party.csv", cfg_.mode);

  feat::Sources src;
  src.links = &links;
  src.zones = &zones;
  src.lgas = &lgas;
  src.station_obs = &obs;
  src.third_party = &third_party;
  src.counts = &counts;

  feat::BuildReport train_rep, infer_rep;
  const auto train_m =
      feat::build_training_matrix(src, cfg_.mode, feat::feature_canon(), &train_rep);
  const auto infer_m =
      feat::build_inference_matrix(src, cfg_.mode, feat::feature_canon(), &infer_rep);
  feat::write_matrix_csv(dir + "/train_matrix.csv", train_m);
  feat::write_matrix_csv(dir + "/infer_matrix.csv", infer_m);

  json rep;
  rep["format_version"] = 1;
  rep["training"] = json::parse(train_rep.to_json());
  rep["inference"] = json::parse(infer_rep.to_json());
  write_file_bytes(dir + "/featurize_report.json", rep.dump(2) + "\n");

  return {dir + "/train_matrix.csv", dir + "/infer_matrix.csv", dir + "/featurize_report.json"};
}

std::vector<std::string> Pipeline::run_select() {
  const std::string dir = cfg_.out_dir + "/select";
  fs::create_directories(dir);

  const auto full = feat::read_matrix_csv(cfg_.out_dir + "/featurize/train_matrix.csv");
  const std::string candidate_set = cfg_.mode == data::Mode::walk ? "walk_full" : "cycle_full";
  const auto candidates = feat::select_columns(full, feat::named_feature_set(candidate_set));

  // GINI column from a forest over the candidate set.
  model::ForestConfig fc;
  fc.n_trees = 100;
  fc.max_depth = 10;
  model::RandomForest forest;
  forest.fit(candidates.X, candidates.y, fc, derive_seed(cfg_.seed, 0x91211ull), cfg_.threads);
  const std::vector<double> imp = forest.feature_importances();
  std::map<std::string, double> gini;
  for (std::size_t j = 0; j < candidates.schema.size(); ++j) {
    gini[candidates.schema[j]] = imp[j];
  }

  const auto report = sel::build_selection_report(candidates, cfg_.selection_folds,
                                                  derive_seed(cfg_.seed, 0x5e1ull), &gini);
  write_file_bytes(dir + "/selection.csv", report.to_csv());
  write_file_bytes(dir + "/selection.json", report.to_json());

  json feats;
  feats["format_version"] = 1;
  feats["candidates"] = candidate_set;
  feats["features"] = cfg_.resolved_features();
  feats["source"] = !cfg_.feature_list.empty()
                        ? "explicit list"
                        : (cfg_.feature_set == "auto" ? "mode default" : cfg_.feature_set);
  write_file_bytes(dir + "/features.json", feats.dump(2) + "\n");

  return {dir + "/selection.csv", dir + "/selection.json", dir + "/features.json"};
}

namespace {

std::vector<std::string> read_feature_list(const std::string& path) {
  return json::parse(read_file_bytes(path)).at("features").get<std::vector<std::string>>();
}

}  // namespace

std::vector<std::string> Pipeline::run_train() {
  const std::string models = cfg_.out_dir + "/models";
  const std::string dir = cfg_.out_dir + "/train";
  fs::create_directories(models);
  fs::create_directories(dir);

  const auto full = feat::read_matrix_csv(cfg_.out_dir + "/featurize/train_matrix.csv");
  const auto features = read_feature_list(cfg_.out_dir + "/select/features.json");
  const auto matrix = feat::select_columns(full, features);

  const auto production =
      model::train_model(matrix, cfg_.model, derive_seed(cfg_.seed, 0x7a11ull), cfg_.threads);
  production.save(models + "/model.json");

  const auto naive = model::train_model(matrix, {"naive_base", json::object()},
                                        derive_seed(cfg_.seed, 0xba5eull), cfg_.threads);
  naive.save(models + "/naive_base.json");

  json rep;
  rep["format_version"] = 1;
  rep["model_family"] = production.family;
  rep["features"] = features;
  rep["training_metrics"] = {{"r2", production.training_metrics.r2},
                             {"mae", production.training_metrics.mae},
                             {"rmse", production.training_metrics.rmse}};
  rep["diagnostics"] = production.diagnostics;
  rep["naive_beta"] = naive.diagnostics.at("beta").get<double>();
  rep["naive_training_metrics"] = {{"r2", naive.training_metrics.r2},
                                   {"mae", naive.training_metrics.mae},
                                   {"rmse", naive.training_metrics.rmse}};
  write_file_bytes(dir + "/training_report.json", rep.dump(2) + "\n");

  return {models + "/model.json", models + "/naive_base.json", dir + "/training_report.json"};
}

std::vector<std::string> Pipeline::run_evaluate() {
  const std::string reports = cfg_.out_dir + "/reports";
  fs::create_directories(reports);

  const auto full = feat::read_matrix_csv(cfg_.out_dir + "/featurize/train_matrix.csv");
  const auto features = read_feature_list(cfg_.out_dir + "/select/features.json");
  const auto matrix = feat::select_columns(full, features);

  const auto plan = eval::make_fold_plan(matrix, cfg_.test_fraction, cfg_.k_folds, cfg_.seed);
  eval::BenchmarkOptions opt;
  opt.seed = cfg_.seed;
  opt.threads = cfg_.threads;
  const auto rep = eval::benchmark(matrix, plan, cfg_.resolved_families(), opt);

  write_file_bytes(reports + "/benchmark_metrics.csv", rep.metrics_csv());
  write_file_bytes(reports + "/test_predictions.csv", rep.test_predictions_csv());
  write_file_bytes(reports + "/cv_predictions.csv", rep.cv_predictions_csv());
  write_file_bytes(reports + "/benchmark_provenance.json", rep.provenance().dump(2) + "\n");
  write_file_bytes(reports + "/fold_plan.json", plan.to_json().dump(2) + "\n");

  return {reports + "/benchmark_metrics.csv", reports + "/test_predictions.csv",
          reports + "/cv_predictions.csv", reports + "/benchmark_provenance.json",
          reports + "/fold_plan.json"};
}

std::vector<std::string> Pipeline::run_infer() {
  const std::string dir = cfg_.out_dir + "/infer";
  fs::create_directories(dir);

  const auto production = model::TrainedModel::load(cfg_.out_dir + "/models/model.json");
  const auto full = feat::read_matrix_csv(cfg_.out_dir + "/featurize/infer_matrix.csv");
  const auto features = read_feature_list(cfg_.out_dir + "/select/features.json");
  const auto matrix = feat::select_columns(full, features);

  infer::PredictReport prep;
  auto results = infer::predict_network(production, matrix, &prep, cfg_.threads);

  std::vector<double> ratios;
  for (const auto& r : results) {
    if (r.ratio) ratios.push_back(*r.ratio);
  }

  const json training_report =
      json::parse(read_file_bytes(cfg_.out_dir + "/train/training_report.json"));
  const double naive_beta = training_report.at("naive_beta").get<double>();

  json elbow_info;
  std::optional<double> elbow = cfg_.elbow_override;
  elbow_info["overridden"] = cfg_.elbow_override.has_value();
  if (!elbow) {
    infer::KneedleResult knee;
    if (ratios.size() >= 3) knee = infer::kneedle_elbow(ratios);
    elbow_info["has_knee"] = knee.has_knee;
    if (knee.has_knee) {
      elbow = knee.elbow;
      elbow_info["rank"] = knee.rank;
    }
  }
  infer::MitigationReport mrep;
  if (elbow) {
    elbow_info["elbow"] = *elbow;
    mrep = infer::mitigate(results, *elbow, infer::parse_strategy(cfg_.strategy), naive_beta);
  } else {
    mrep.unchanged = results.size();
  }

  const auto links =
      data::load_links(cfg_.out_dir + "/ingest/links.geojson", cfg_.mode);
  infer::write_results_csv(dir + "/results.csv", results);
  infer::write_results_geojson(dir + "/results.geojson", results, links);

  json rep;
  rep["format_version"] = 1;
  rep["rows"] = prep.rows;
  rep["floored_negative"] = prep.floored_negative;
  rep["ratios_defined"] = ratios.size();
  rep["strategy"] = cfg_.strategy;
  rep["elbow"] = elbow_info;
  rep["naive_beta"] = naive_beta;
  rep["flagged_outliers"] = mrep.flagged;
  rep["unchanged_rows"] = mrep.unchanged;
  rep["accounting_ok"] = mrep.flagged + mrep.unchanged == results.size();
  write_file_bytes(dir + "/infer_report.json", rep.dump(2) + "\n");

  return {dir + "/results.csv", dir + "/results.geojson", dir + "/infer_report.json"};
}

std::vector<std::string> Pipeline::run_aggregate() {
  const std::string reports = cfg_.out_dir + "/reports";
  fs::create_directories(reports);

  const auto results = infer::read_results_csv(cfg_.out_dir + "/infer/results.csv");
  const auto links = data::load_links(cfg_.out_dir + "/ingest/links.geojson", cfg_.mode);
  const auto lengths = infer::link_lengths_km(links);
  const auto params = cfg_.resolved_aggregation();

  const auto totals = infer::aggregate_trips(results, lengths, params);
  const auto rollup = infer::rollup_by_lga(results, links, params);
  const auto day_class = infer::weekday_weekend_totals(results, lengths, params);

  double rollup_km = 0.0, rollup_trips = 0.0;
  CsvWriter lw({"lga_id", "km", "trips"});
  for (const auto& [lga, t] : rollup) {
    lw.field(lga);
    lw.field(t.km);
    lw.field(t.trips);
    lw.end_row();
    rollup_km += t.km;
    rollup_trips += t.trips;
  }
  lw.save(reports + "/lga_rollup.csv");

  json rep;
  rep["format_version"] = 1;
  rep["params"] = {{"d", params.d},
                   {"gamma", params.gamma},
                   {"source", cfg_.aggregation ? "config" : "mode default"}};
  rep["totals"] = {{"km", totals.km}, {"trips", totals.trips}};
  rep["lga_count"] = rollup.size();
  rep["rollup_km"] = rollup_km;
  rep["rollup_trips"] = rollup_trips;
  rep["rollup_additive"] =
      totals.km == 0.0 || std::abs(rollup_km - totals.km) <= 1e-6 * std::abs(totals.km);
  json dc;
  if (day_class.weekday_trips_per_day) {
    dc["weekday_trips_per_day"] = *day_class.weekday_trips_per_day;
  }
  if (day_class.weekend_trips_per_day) {
    dc["weekend_trips_per_day"] = *day_class.weekend_trips_per_day;
  }
  dc["weekday_dates"] = day_class.weekday_dates;
  dc["weekend_dates"] = day_class.weekend_dates;
  rep["day_class"] = dc;
  write_file_bytes(reports + "/aggregation.json", rep.dump(2) + "\n");

  return {reports + "/aggregation.json", reports + "/lga_rollup.csv"};
}

std::vector<std::string> Pipeline::run_report() {
  const std::string reports = cfg_.out_dir + "/reports";
  fs::create_directories(reports);
  std::vector<std::string> outputs;

  const json ingest_rep = json::parse(read_file_bytes(cfg_.out_dir + "/ingest/ingest_report.json"));
  const json featurize_rep =
      json::parse(read_file_bytes(cfg_.out_dir + "/featurize/featurize_report.json"));
  const json selection = json::parse(read_file_bytes(cfg_.out_dir + "/select/selection.json"));
  const json training_rep =
      json::parse(read_file_bytes(cfg_.out_dir + "/train/training_report.json"));
  const json infer_rep = json::parse(read_file_bytes(cfg_.out_dir + "/infer/infer_report.json"));
  const json aggregation = json::parse(read_file_bytes(reports + "/aggregation.json"));

  // Descriptive stats as a flat table.
  CsvWriter sw({"series", "min", "mean", "median", "max", "std_population"});
  if (ingest_rep.contains("stats")) {
    for (const auto& [name, s] : ingest_rep.at("stats").items()) {
      sw.field(name);
      sw.field(s.at("min").get<double>());
      sw.field(s.at("mean").get<double>());
      sw.field(s.at("median").get<double>());
      sw.field(s.at("max").get<double>());
      sw.field(s.at("std_population").get<double>());
      sw.end_row();
    }
  }
  sw.save(reports + "/descriptive_stats.csv");
  outputs.push_back(reports + "/descriptive_stats.csv");

  // Benchmark table re-read as structured rows.
  const CsvTable bench = read_csv(reports + "/benchmark_metrics.csv");
  json bench_rows = json::array();
  std::map<std::string, double> family_test_r2;
  {
    const auto c_family = bench.col("family");
    const auto c_phase = bench.col("phase");
    const auto c_r2 = bench.col("r2");
    const auto c_mae = bench.col("mae");
    const auto c_rmse = bench.col("rmse");
    const auto c_note = bench.col("note");
    for (const auto& row : bench.rows) {
      json r;
      r["family"] = row[c_family];
      r["phase"] = row[c_phase];
      if (!row[c_r2].empty()) {
        r["r2"] = std::stod(row[c_r2]);
        r["mae"] = std::stod(row[c_mae]);
        r["rmse"] = std::stod(row[c_rmse]);
      }
      if (!row[c_note].empty()) r["note"] = row[c_note];
      bench_rows.push_back(r);
      if (row[c_phase] == "testing" && !row[c_r2].empty()) {
        family_test_r2[row[c_family]] = std::stod(row[c_r2]);
      }
    }
  }

  json summary;
  summary["format_version"] = 1;
  summary["mode"] = data::to_string(cfg_.mode);
  summary["seed"] = cfg_.seed;
  summary["ingest"] = ingest_rep;
  summary["featurize"] = featurize_rep;
  summary["selection"] = selection;
  summary["training"] = training_rep;
  summary["benchmark"] = bench_rows;
  summary["inference"] = infer_rep;
  summary["aggregation"] = aggregation;

  // Ground-truth recovery when the inputs came from a generated world.
  const std::string synth_dir = cfg_.out_dir + "/synth";
  if (cfg_.inputs_from_synth() && fs::exists(synth_dir + "/truth/meta.json")) {
    const auto truth = synth::read_truth(synth_dir);
    const auto results = infer::read_results_csv(cfg_.out_dir + "/infer/results.csv");
    const auto links = data::load_links(cfg_.out_dir + "/ingest/links.geojson", cfg_.mode);
    const auto lengths = infer::link_lengths_km(links);
    synth::OracleInputs oin;
    oin.seed = cfg_.seed;
    oin.fitted_base_beta = training_rep.at("naive_beta").get<double>();
    oin.results = &results;
    oin.length_km = &lengths;
    oin.aggregate = {aggregation.at("totals").at("km").get<double>(),
                     aggregation.at("totals").at("trips").get<double>()};
    oin.params = cfg_.resolved_aggregation();
    oin.family_test_r2 = family_test_r2;
    const json oracle = synth::oracle_report(truth, oin);
    write_file_bytes(reports + "/oracle_report.json", oracle.dump(2) + "\n");
    outputs.push_back(reports + "/oracle_report.json");
    summary["oracle"] = oracle;
  }

  write_file_bytes(reports + "/summary.json", summary.dump(2) + "\n");
  outputs.push_back(reports + "/summary.json");
  return outputs;
}

}  // namespace linkvol::cli
