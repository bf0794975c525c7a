#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "fpu/cli/commands.hpp"
#include "fpu/error.hpp"

namespace {

using namespace fpu::cli;

int run(int argc, char** argv) {
  CLI::App app{"Fingerprint uncertainty experiments: data generation, training, evaluation and analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::string config_path, out;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Experiment config (.ini) or run record (.json) to replay")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed");
  auto* out_opt = app.add_option("--out", out, "Override the output directory");
  app.add_flag("--force", global.force, "Overwrite existing outputs");
  app.add_option("--threads", global.threads, "Worker threads for dataset generation")->check(CLI::PositiveNumber);

  auto* generate = app.add_subcommand("generate", "Generate a synthetic fingerprint dataset");
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint and run record");

  std::string checkpoint;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  evaluate->add_option("checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);

  std::string mode_text = "data";
  std::size_t passes = 5;
  auto* analyze = app.add_subcommand("analyze-uncertainty", "Per-image uncertainty statistics and plots");
  analyze->add_option("checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  analyze->add_option("--mode", mode_text, "data (dual head) or model (MC dropout)");
  auto* analyze_passes = analyze->add_option("--passes", passes, "MC-dropout passes T");

  std::size_t repeats = 20;
  auto* bench = app.add_subcommand("benchmark-time", "Time single-pass, dual-head and MC-dropout inference");
  bench->add_option("checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  bench->add_option("--passes", passes, "MC-dropout passes T");
  bench->add_option("--repeats", repeats, "Timed repetitions");

  std::string run_a, run_b;
  auto* compare = app.add_subcommand("compare", "Paired comparison of two run records");
  compare->add_option("run_a", run_a, "Baseline run record")->required()->check(CLI::ExistingFile);
  compare->add_option("run_b", run_b, "Candidate run record")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage-error: " << e.what() << "\n";
    return 2;
  }

  if (!config_path.empty()) global.config_path = config_path;
  if (*seed_opt) global.seed = seed;
  if (*out_opt) global.out = out;

  if (*compare) {
    cmd_compare(run_a, run_b, global, std::cout);
    return 0;
  }
  if (*bench) {
    cmd_benchmark_time(checkpoint, passes, repeats, global, std::cout);
    return 0;
  }
  ExperimentConfig config = resolve_config(global);
  if (*generate) {
    cmd_generate(config, global, std::cout);
  } else if (*train) {
    cmd_train(config, global, std::cout);
  } else if (*evaluate) {
    cmd_evaluate(checkpoint, config, global, std::cout);
  } else if (*analyze) {
    const UncertaintyMode mode = parse_uncertainty_mode(mode_text);
    if (!*analyze_passes) passes = config.evaluation.mc_passes;
    cmd_analyze_uncertainty(checkpoint, config, mode, passes, global, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  fpu::cli::tune_allocator();
  try {
    return run(argc, argv);
  } catch (const fpu::Error& e) {
    std::cerr << e.error_class() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "internal-error: " << e.what() << "\n";
  }
  return EXIT_FAILURE;
}
