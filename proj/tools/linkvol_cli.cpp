// Pipeline driver: every stage is a subcommand, `run` chains them all.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linkvol/cli/pipeline.hpp"
#include "linkvol/data/records.hpp"

namespace {

using linkvol::cli::Pipeline;
using linkvol::cli::RunConfig;
using linkvol::cli::StageResult;

struct Flags {
  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::string strategy;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool force = false;
};

RunConfig build_config(const Flags& f) {
  RunConfig cfg = f.config_path.empty() ? RunConfig{} : RunConfig::load(f.config_path);
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.mode.empty()) cfg.mode = linkvol::data::parse_mode(f.mode);
  if (!f.strategy.empty()) cfg.strategy = f.strategy;
  if (f.seed_given) {
    cfg.seed = f.seed;
    cfg.seed_set = true;
  }
  if (f.threads > 0) cfg.threads = f.threads;
  return cfg;
}

void print_results(const std::vector<StageResult>& results) {
  for (const auto& r : results) {
    std::printf("%-10s %s\n", r.stage.c_str(), r.skipped ? "up to date" : "done");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link-level walking and cycling volume estimation pipeline"};
  app.require_subcommand(1, 0);  // at least one stage, chains allowed

  Flags flags;
  app.add_option("--config", flags.config_path, "Run configuration (JSON)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", flags.out_dir, "Output directory (default: out)");
  auto* seed_opt = app.add_option("--seed", flags.seed, "Run seed (overrides config)");
  app.add_option("--mode", flags.mode, "Travel mode")
      ->check(CLI::IsMember({"walk", "cycle"}));
  app.add_option("--strategy", flags.strategy, "Outlier mitigation strategy")
      ->check(CLI::IsMember({"cap", "fallback"}));
  app.add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--force", flags.force, "Run even when upstream manifests are stale");

  std::vector<std::string> requested;
  for (const auto& stage : linkvol::cli::stage_names()) {
    app.add_subcommand(stage, "Run the " + stage + " stage")->callback([&requested, stage] {
      requested.push_back(stage);
    });
  }
  app.add_subcommand("run", "Run every stage in order")->callback([&requested] {
    requested.push_back("run");
  });

  CLI11_PARSE(app, argc, argv);
  flags.seed_given = seed_opt->count() > 0;

  try {
    Pipeline pipeline(build_config(flags), flags.force);
    std::vector<StageResult> results;
    for (const auto& name : requested) {
      if (name == "run") {
        const auto all = pipeline.run_all();
        results.insert(results.end(), all.begin(), all.end());
      } else {
        results.push_back(pipeline.run_stage(name));
      }
    }
    print_results(results);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
