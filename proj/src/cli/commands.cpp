#include "fpu/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fpu/cli/plots.hpp"
#include "fpu/cli/trainer.hpp"
#include "fpu/error.hpp"
#include "fpu/models/checkpoint.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fpu::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kCheckpointFile = "model.ckpt";
constexpr const char* kRunRecordFile = "run_record.json";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file << text;
  if (!file) throw IoError("failed writing: " + path.string());
}

// Refuses to replace existing outputs unless forced; creates the directory.
void prepare_outputs(const fs::path& dir, const std::vector<std::string>& files, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  if (force) return;
  for (const auto& f : files) {
    if (fs::exists(dir / f)) {
      throw InvalidState("output " + (dir / f).string() + " already exists (use --force to overwrite)");
    }
  }
}

synthdata::DatasetManifest open_dataset(const fs::path& dir) {
  synthdata::DatasetManifest manifest = synthdata::load_manifest(dir);
  synthdata::verify_manifest(manifest);
  return manifest;
}

void check_model_matches_dataset(const models::ModelConfig& model, const synthdata::DatasetManifest& manifest) {
  if (model.height != manifest.options.height || model.width != manifest.options.width) {
    throw InvalidArgument("model expects " + std::to_string(model.height) + "x" + std::to_string(model.width) +
                          " images but the dataset has " + std::to_string(manifest.options.height) + "x" +
                          std::to_string(manifest.options.width));
  }
}

// Copies every parameter of `source` whose name exists in `target`.
void copy_shared_parameters(const models::Model& source, models::Model& target) {
  for (const auto& dst : target.named_parameters()) {
    for (const auto& src : source.named_parameters()) {
      if (src.name == dst.name && src.value.shape() == dst.value.shape()) {
        ndgrad::Tensor handle = dst.value;
        std::copy(src.value.values().begin(), src.value.values().end(), handle.mutable_values().begin());
      }
    }
  }
}

std::optional<double> metric_value(const metrics::ImageMetrics& m, const std::string& name) {
  if (name == "dice") return m.dice;
  if (name == "jaccard") return m.jaccard;
  if (name == "err") return m.err;
  if (name == "hc") return m.hc;
  if (name == "mc") return m.mc;
  if (name == "psnr" && m.psnr && !m.psnr->infinite) return m.psnr->db;
  return std::nullopt;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream out;
  out.precision(6);
  out << *v;
  return out.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(); }

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
#endif
}

ExperimentConfig resolve_config(const GlobalOptions& global) {
  ExperimentConfig config;
  if (global.config_path && global.config_path->extension() == ".json") {
    // A run record: replay its resolved configuration.
    config = read_run_record(*global.config_path).config;
  } else if (global.config_path) {
    config = load_config(*global.config_path);
  } else {
    config.sync_model();
  }
  if (global.seed) config.training.seed = *global.seed;
  if (global.out) config.output_dir = *global.out;
  config.sync_model();
  config.validate();
  return config;
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw InvalidState("output path " + dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw InvalidState("output directory " + dir.string() + " already exists and is not empty (use --force)");
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

GenerateResult cmd_generate(const ExperimentConfig& config, const GlobalOptions& global, std::ostream& log) {
  const fs::path dir = global.out ? *global.out : config.dataset.path;
  prepare_output_dir(dir, global.force);
  synthdata::DatasetOptions options = config.dataset.generation;
  if (global.seed) options.seed = *global.seed;
  options.threads = std::max<std::size_t>(1, global.threads);
  GenerateResult result{dir / synthdata::kManifestFile, synthdata::generate_dataset(dir, options)};

  double coverage = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < options.count; ++i) {
    const auto [ridge, deg] = synthdata::draw_sample_params(options, i);
    const synthdata::Image mask = synthdata::rasterize_mask(ridge.height, ridge.width, ridge.mask_shape);
    for (double m : mask.pixels) coverage += m;
    noise += deg.gaussian_noise_std;
  }
  log << "manifest: " << result.manifest_path.string() << "\n"
      << "samples: " << options.count << " (" << result.manifest.count(synthdata::Split::kTrain) << " train, "
      << result.manifest.count(synthdata::Split::kTest) << " test), " << options.height << "x" << options.width
      << "\n"
      << "mean mask coverage: " << coverage / static_cast<double>(options.count * options.height * options.width)
      << "\n"
      << "mean noise std: " << noise / static_cast<double>(options.count) << "\n"
      << "dataset hash: " << result.manifest.dataset_hash << "\n";
  return result;
}

TrainResult cmd_train(const ExperimentConfig& base, const GlobalOptions& global, std::ostream& log) {
  ExperimentConfig config = base;
  const synthdata::DatasetManifest manifest = open_dataset(config.dataset.path);
  config.dataset.generation = manifest.options;
  config.dataset.generation.threads = 1;
  config.sync_model();
  config.validate();
  const fs::path out = config.output_dir;
  prepare_output_dir(out, global.force);

  std::vector<synthdata::Sample> train_set = synthdata::load_split(manifest, synthdata::Split::kTrain);
  models::Model model(config.model);
  log << "training " << models::to_string(config.model.task) << " model (" << models::to_string(config.model.head_mode)
      << " head, " << model.parameter_count() << " parameters) with " << to_string(config.training.loss) << " on "
      << train_set.size() << " samples\n";
  TrainingResult training = train_model(model, train_set, config.training, [&](std::size_t epoch, double loss) {
    log << "epoch " << epoch << "/" << config.training.epochs << " loss " << loss << "\n";
    log.flush();
  });
  train_set.clear();
  for (const auto& w : training.warnings) log << "warning: " << w << "\n";

  RunRecord record;
  record.config = config;
  record.dataset_hash = manifest.dataset_hash;
  record.loss_curve = training.loss_curve;
  record.warnings = training.warnings;

  const std::vector<IndexedSample> test_set = load_indexed(manifest, synthdata::Split::kTest);
  record.metrics = evaluate_model(model, test_set, config.evaluation);
  record.metrics.model_id = models::to_string(config.model.task) + "/" + models::to_string(config.model.head_mode) +
                            "/" + to_string(config.training.loss) + "/seed" + std::to_string(config.training.seed);
  record.metrics.dataset_id = manifest.dataset_hash;
  record.metrics.seed = config.training.seed;
  if (config.model.head_mode == models::HeadMode::kDual) {
    record.uncertainty = analyze_uncertainty(model, test_set, UncertaintyMode::kData, config.evaluation.mc_passes,
                                             config.evaluation.threshold, config.training.seed)
                             .aggregate;
  }

  const fs::path checkpoint = out / kCheckpointFile;
  models::save_checkpoint(model, checkpoint);
  metrics::write_report(record.metrics, out / "metrics.json", out / "metrics.csv");
  std::ostringstream curve;
  curve << "epoch,loss\n";
  curve.precision(17);
  for (std::size_t i = 0; i < record.loss_curve.size(); ++i) curve << i + 1 << "," << record.loss_curve[i] << "\n";
  write_text(out / "loss_curve.csv", curve.str());
  write_text(out / "config.ini", to_ini(config));
  for (const char* file : {kCheckpointFile, "metrics.json", "metrics.csv", "loss_curve.csv", "config.ini"}) {
    record.artifact_hashes[file] = synthdata::sha256_file(out / file);
  }
  write_run_record(record, out / kRunRecordFile);

  log << "checkpoint: " << checkpoint.string() << "\n";
  if (record.metrics.mean.dice) log << "test dice: " << *record.metrics.mean.dice << "\n";
  if (record.metrics.mean.psnr) log << "test psnr: " << metrics::to_string(*record.metrics.mean.psnr) << "\n";
  return {checkpoint, out / kRunRecordFile, std::move(record)};
}

metrics::MetricsReport cmd_evaluate(const fs::path& checkpoint, const ExperimentConfig& config,
                                    const GlobalOptions& global, std::ostream& log) {
  const models::Model model = models::load_checkpoint(checkpoint);
  if (model.config().task != config.model.task) {
    throw InvalidArgument("checkpoint is a " + models::to_string(model.config().task) +
                          " model but the configuration asks for " + models::to_string(config.model.task));
  }
  const synthdata::DatasetManifest manifest = open_dataset(config.dataset.path);
  check_model_matches_dataset(model.config(), manifest);
  prepare_outputs(config.output_dir, {"metrics.json", "metrics.csv"}, global.force);

  metrics::MetricsReport report =
      evaluate_model(model, load_indexed(manifest, synthdata::Split::kTest), config.evaluation);
  report.model_id = checkpoint.string();
  report.dataset_id = manifest.dataset_hash;
  report.seed = model.config().seed;
  metrics::write_report(report, config.output_dir / "metrics.json", config.output_dir / "metrics.csv");
  log << metrics::to_csv(report).substr(metrics::to_csv(report).rfind("mean,"));
  return report;
}

UncertaintyAnalysis cmd_analyze_uncertainty(const fs::path& checkpoint, const ExperimentConfig& config,
                                            UncertaintyMode mode, std::size_t passes, const GlobalOptions& global,
                                            std::ostream& log) {
  const models::Model model = models::load_checkpoint(checkpoint);
  if (mode == UncertaintyMode::kData && model.config().head_mode != models::HeadMode::kDual) {
    throw InvalidState("checkpoint has a single head; pass --mode model to estimate MC-dropout uncertainty");
  }
  const synthdata::DatasetManifest manifest = open_dataset(config.dataset.path);
  check_model_matches_dataset(model.config(), manifest);
  const fs::path out = config.output_dir;
  prepare_outputs(out, {"uncertainty.json", "uncertainty.csv", "uncertainty_fg_bg.svg",
                        "uncertainty_correct_incorrect.svg"},
                  global.force);
  fs::create_directories(out / "heatmaps");

  const UncertaintyAnalysis analysis = analyze_uncertainty(model, load_indexed(manifest, synthdata::Split::kTest),
                                                           mode, passes, config.evaluation.threshold,
                                                           config.training.seed);
  json per_image = json::array();
  std::ostringstream csv;
  csv << "index,mean_var_foreground,mean_var_background,mean_var_correct,mean_var_incorrect,heat_min,heat_max\n";
  for (const ImageUncertainty& u : analysis.per_image) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.pgm", u.index);
    const HeatMapRange range = write_heat_map(u.variance, out / "heatmaps" / name);
    json row = metrics::to_json(u.stats);
    row["index"] = u.index;
    row["heat_map"] = std::string("heatmaps/") + name;
    row["heat_map_range"] = {range.min, range.max};
    per_image.push_back(std::move(row));
    csv << u.index << "," << fmt(u.stats.mean_var_foreground) << "," << fmt(u.stats.mean_var_background) << ","
        << fmt(u.stats.mean_var_correct) << "," << fmt(u.stats.mean_var_incorrect) << "," << fmt(range.min) << ","
        << fmt(range.max) << "\n";
  }
  const json doc = {{"mode", to_string(mode)},
                    {"passes", mode == UncertaintyMode::kModel ? json(passes) : json()},
                    {"checkpoint", checkpoint.string()},
                    {"dataset_hash", manifest.dataset_hash},
                    {"aggregate", metrics::to_json(analysis.aggregate)},
                    {"per_image", per_image}};
  write_text(out / "uncertainty.json", doc.dump(2) + "\n");
  write_text(out / "uncertainty.csv", csv.str());

  const metrics::UncertaintyStats& a = analysis.aggregate;
  const std::string what = mode == UncertaintyMode::kData ? "data" : "model";
  write_text(out / "uncertainty_fg_bg.svg",
             svg_bar_chart("Mean " + what + " uncertainty by region",
                           {{"foreground", a.mean_var_foreground.value_or(0.0)},
                            {"background", a.mean_var_background.value_or(0.0)}}));
  write_text(out / "uncertainty_correct_incorrect.svg",
             svg_bar_chart("Mean " + what + " uncertainty by outcome",
                           {{"correct", a.mean_var_correct.value_or(0.0)},
                            {"incorrect", a.mean_var_incorrect.value_or(0.0)}}));
  log << "mean variance foreground " << fmt(a.mean_var_foreground) << ", background " << fmt(a.mean_var_background)
      << ", correct " << fmt(a.mean_var_correct) << ", incorrect " << fmt(a.mean_var_incorrect) << "\n";
  return analysis;
}

BenchmarkResult cmd_benchmark_time(const fs::path& checkpoint, std::size_t passes, std::size_t repeats,
                                   const GlobalOptions& global, std::ostream& log) {
  const models::Model trained = models::load_checkpoint(checkpoint);
  models::ModelConfig single_config = trained.config();
  single_config.head_mode = models::HeadMode::kSingle;
  models::ModelConfig dual_config = trained.config();
  dual_config.head_mode = models::HeadMode::kDual;
  models::Model single(single_config), dual(dual_config);
  copy_shared_parameters(trained, single);
  copy_shared_parameters(trained, dual);

  ndgrad::Rng rng(trained.config().seed);
  std::vector<double> pixels(single_config.height * single_config.width);
  for (double& v : pixels) v = rng.uniform();
  const ndgrad::Tensor x({1, 1, single_config.height, single_config.width}, std::move(pixels));
  const ndgrad::Rng mc_rng = rng.split(1);

  BenchmarkResult result;
  const std::vector<metrics::TimingSummary> timings = metrics::time_interleaved(
      {[&] { single.predict(x); }, [&] { dual.predict(x); },
       [&] { models::forward_mc_dropout(single, x, passes, mc_rng); }},
      repeats);
  result.rows = {{"single-pass baseline", 1, timings[0]},
                 {"single-pass dual head", 1, timings[1]},
                 {"MC dropout", passes, timings[2]}};
  const double base = result.rows[0].summary.median;
  result.dual_over_single = result.rows[1].summary.median / base;
  result.mc_over_single = result.rows[2].summary.median / base;

  std::ostringstream csv;
  csv << "model,passes,median_s,q1_s,q3_s,iqr_s,relative_to_baseline\n";
  for (const auto& row : result.rows) {
    csv << row.name << "," << row.passes << "," << fmt(row.summary.median) << "," << fmt(row.summary.q1) << ","
        << fmt(row.summary.q3) << "," << fmt(row.summary.iqr()) << "," << fmt(row.summary.median / base) << "\n";
  }
  if (global.out) {
    prepare_outputs(*global.out, {"timing.csv"}, global.force);
    write_text(*global.out / "timing.csv", csv.str());
  }
  log << csv.str();
  return result;
}

double sign_test_p_value(std::size_t positives, std::size_t negatives) {
  const std::size_t n = positives + negatives;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(positives, negatives);
  // P(X <= k) for X ~ Binomial(n, 1/2), accumulated in log space.
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                            static_cast<double>(n) * std::log(2.0);
    tail += std::exp(log_term);
  }
  return std::min(1.0, 2.0 * tail);
}

ComparisonResult cmd_compare(const fs::path& run_a, const fs::path& run_b, const GlobalOptions& global,
                             std::ostream& log) {
  const RunRecord a = read_run_record(run_a);
  const RunRecord b = read_run_record(run_b);
  if (a.dataset_hash != b.dataset_hash) {
    throw InvalidArgument("runs were evaluated on different datasets (" + a.dataset_hash + " vs " + b.dataset_hash +
                          ")");
  }
  std::map<std::size_t, const metrics::ImageMetrics*> by_index;
  for (const auto& m : a.metrics.per_image) by_index[m.index] = &m;
  std::vector<std::pair<const metrics::ImageMetrics*, const metrics::ImageMetrics*>> pairs;
  ComparisonResult result;
  for (const auto& m : b.metrics.per_image) {
    if (auto it = by_index.find(m.index); it != by_index.end()) {
      pairs.emplace_back(it->second, &m);
      result.paired_indices.push_back(m.index);
    }
  }

  std::ostringstream paired_csv;
  paired_csv << "index";
  const std::vector<std::string> names = {"dice", "jaccard", "err", "hc", "mc", "psnr"};
  for (const auto& name : names) {
    MetricComparison c;
    c.metric = name;
    const bool lower_is_better = name == "err" || name == "mc";
    double sum_a = 0.0, sum_b = 0.0, sum_d = 0.0;
    std::size_t n = 0;
    for (const auto& [ma, mb] : pairs) {
      const auto va = metric_value(*ma, name), vb = metric_value(*mb, name);
      if (!va || !vb) continue;
      sum_a += *va, sum_b += *vb, sum_d += *vb - *va, ++n;
      const double gain = lower_is_better ? *va - *vb : *vb - *va;
      if (gain > 0) {
        ++c.b_better;
      } else if (gain < 0) {
        ++c.a_better;
      } else {
        ++c.ties;
      }
    }
    if (n == 0) continue;
    c.mean_a = sum_a / n;
    c.mean_b = sum_b / n;
    c.mean_difference = sum_d / n;
    c.sign_test_p = sign_test_p_value(c.b_better, c.a_better);
    result.metrics.push_back(c);
    paired_csv << ",d_" << name;
  }
  paired_csv << "\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    paired_csv << result.paired_indices[i];
    for (const auto& c : result.metrics) {
      const auto va = metric_value(*pairs[i].first, c.metric), vb = metric_value(*pairs[i].second, c.metric);
      paired_csv << "," << (va && vb ? fmt(*vb - *va) : "");
    }
    paired_csv << "\n";
  }

  std::ostringstream summary;
  summary << "metric,mean_a,mean_b,mean_diff_b_minus_a,b_better,a_better,ties,sign_test_p\n";
  json rows = json::array();
  for (const auto& c : result.metrics) {
    summary << c.metric << "," << fmt(c.mean_a) << "," << fmt(c.mean_b) << "," << fmt(c.mean_difference) << ","
            << c.b_better << "," << c.a_better << "," << c.ties << "," << fmt(c.sign_test_p) << "\n";
    rows.push_back({{"metric", c.metric},
                    {"mean_a", optional_json(c.mean_a)},
                    {"mean_b", optional_json(c.mean_b)},
                    {"mean_difference", optional_json(c.mean_difference)},
                    {"b_better", c.b_better},
                    {"a_better", c.a_better},
                    {"ties", c.ties},
                    {"sign_test_p", c.sign_test_p}});
  }
  if (global.out) {
    prepare_outputs(*global.out, {"comparison.json", "comparison.csv", "paired_differences.csv"}, global.force);
    const json doc = {{"run_a", run_a.string()},
                      {"run_b", run_b.string()},
                      {"dataset_hash", a.dataset_hash},
                      {"paired_images", result.paired_indices.size()},
                      {"metrics", rows}};
    write_text(*global.out / "comparison.json", doc.dump(2) + "\n");
    write_text(*global.out / "comparison.csv", summary.str());
    write_text(*global.out / "paired_differences.csv", paired_csv.str());
  }
  log << summary.str();
  return result;
}

}  // namespace fpu::cli
