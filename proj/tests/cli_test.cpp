#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "fpu/cli/commands.hpp"
#include "fpu/cli/plots.hpp"
#include "fpu/cli/trainer.hpp"
#include "fpu/error.hpp"
#include "fpu/losses/losses.hpp"
#include "fpu/models/checkpoint.hpp"
#include "fpu/synthdata/pgm.hpp"

namespace fs = std::filesystem;
using namespace fpu;
using namespace fpu::cli;

namespace {

fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / "fpu_cli_test" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const fs::path& data, models::Task task, LossKind loss) {
  ExperimentConfig c;
  c.dataset.path = data;
  c.dataset.generation.count = 24;
  c.dataset.generation.height = 32;
  c.dataset.generation.width = 32;
  c.dataset.generation.seed = 11;
  c.model.task = task;
  c.model.head_mode =
      loss == LossKind::kHetCls || loss == LossKind::kHetReg ? models::HeadMode::kDual : models::HeadMode::kSingle;
  c.training.loss = loss;
  c.training.epochs = 2;
  c.sync_model();
  c.validate();
  return c;
}

// One small dataset shared by the whole suite.
class CliFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = fs::temp_directory_path() / "fpu_cli_test" / "shared_data";
    fs::remove_all(data_);
    GlobalOptions g;
    std::ostringstream log;
    cmd_generate(small_config(data_, models::Task::kSegmentation, LossKind::kCe), g, log);
  }

  ExperimentConfig config(models::Task task, LossKind loss, const fs::path& out) const {
    ExperimentConfig c = small_config(data_, task, loss);
    c.output_dir = out;
    return c;
  }

  static fs::path data_;
};

fs::path CliFixture::data_;

}  // namespace

// ---- config ----

TEST(Config, DefaultsAreValidAndDeskScale) {
  ExperimentConfig c;
  c.sync_model();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.training.epochs, 30u);
  EXPECT_EQ(c.training.batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.training.learning_rate, 1e-3);
  EXPECT_EQ(c.training.samples, 5u);
  EXPECT_EQ(c.model.base_channels, 8u);
  EXPECT_EQ(c.model.depth, 3u);
  EXPECT_EQ(c.model.height, 64u);
}

TEST(Config, ParsesSectionsAndResolvesRelativePaths) {
  const ExperimentConfig c = parse_config(
      "[dataset]\npath = d\ncount = 40\ngaussian_noise_std = 0.01, 0.02\n"
      "[model]\ntask = reconstruction\nhead_mode = dual\n"
      "[training]\nloss = het_reg\nepochs = 3\nseed = 9\n"
      "[evaluation]\nmetrics = psnr\n"
      "[output]\ndir = out\n",
      "/base");
  EXPECT_EQ(c.dataset.path, fs::path("/base/d"));
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
  EXPECT_EQ(c.dataset.generation.count, 40u);
  EXPECT_EQ(c.model.task, models::Task::kReconstruction);
  EXPECT_EQ(c.training.loss, LossKind::kHetReg);
  EXPECT_EQ(c.model.seed, 9u);
  EXPECT_EQ(c.evaluation.metrics, std::vector<std::string>{"psnr"});
}

TEST(Config, RejectsEveryLossTaskHeadMismatch) {
  const std::vector<std::pair<std::string, std::string>> bad = {
      {"segmentation", "mse"},     {"segmentation", "het_reg"}, {"reconstruction", "ce"},
      {"reconstruction", "het_cls"},
  };
  for (const auto& [task, loss] : bad) {
    for (const char* head : {"single", "dual"}) {
      const std::string text =
          "[model]\ntask = " + task + "\nhead_mode = " + head + "\n[training]\nloss = " + loss + "\n";
      EXPECT_THROW(parse_config(text, "."), InvalidArgument) << task << " " << head << " " << loss;
    }
  }
  EXPECT_THROW(parse_config("[model]\nhead_mode = dual\n[training]\nloss = ce\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[model]\nhead_mode = single\n[training]\nloss = het_cls\n", "."), InvalidArgument);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("[training]\nepoch = 3\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[nope]\na = 1\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[training]\nepochs = -1\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[training]\nlearning_rate = fast\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[training]\nloss = hinge\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[evaluation]\nmc_passes = 1\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[dataset]\ngaussian_noise_std = 0.1\n", "."), InvalidArgument);
  EXPECT_THROW(parse_config("[training\nepochs = 3\n", "."), ParseError);
  EXPECT_THROW(load_config("/nonexistent/exp.ini"), IoError);
}

TEST(Config, IniAndJsonRoundTripEveryField) {
  ExperimentConfig c = parse_config(
      "[dataset]\ncount = 30\nsplit_ratio = 0.7\nseed = 5\nblur_sigma = 0.25, 0.5\n"
      "[model]\ntask = segmentation\nhead_mode = dual\nbase_channels = 4\ndropout_rate = 0.1\n"
      "[training]\nloss = het_cls\nepochs = 7\nbatch_size = 4\nlearning_rate = 0.0005\nsamples = 9\nseed = 3\n"
      "[evaluation]\nmetrics = dice, err\nthreshold = 0.4\npatch = 8\nmc_passes = 7\n",
      "/root/x");
  const ExperimentConfig from_ini = parse_config(to_ini(c), "/elsewhere");
  EXPECT_EQ(to_json(from_ini), to_json(c));
  const ExperimentConfig from_json = config_from_json(to_json(c));
  EXPECT_EQ(to_json(from_json), to_json(c));
}

// ---- trainer ----

TEST(Trainer, DivergenceWarningFollowsTailSlope) {
  EXPECT_TRUE(divergence_warning({1.0, 0.9, 0.8}).empty());
  EXPECT_TRUE(divergence_warning({1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3}).empty());
  EXPECT_FALSE(divergence_warning({1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.6, 0.7}).empty());
}

TEST(Trainer, RejectsLossModelMismatch) {
  models::ModelConfig mc;
  mc.height = mc.width = 32;
  models::Model model(mc);
  TrainingSection t;
  t.loss = LossKind::kHetCls;
  EXPECT_THROW(train_model(model, {}, t), InvalidArgument);
}

TEST_F(CliFixture, ZeroEpochsWritesInitialWeights) {
  const fs::path out = scratch() / "run";
  ExperimentConfig c = config(models::Task::kSegmentation, LossKind::kCe, out);
  c.training.epochs = 0;
  std::ostringstream log;
  const TrainResult r = cmd_train(c, GlobalOptions{}, log);
  EXPECT_TRUE(r.record.loss_curve.empty());
  const models::Model loaded = models::load_checkpoint(r.checkpoint_path);
  const models::Model fresh(r.record.config.model);
  ASSERT_EQ(loaded.named_parameters().size(), fresh.named_parameters().size());
  for (std::size_t i = 0; i < fresh.named_parameters().size(); ++i) {
    const auto a = loaded.named_parameters()[i].value.values();
    const auto b = fresh.named_parameters()[i].value.values();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end())) << fresh.named_parameters()[i].name;
  }
}

TEST_F(CliFixture, SameSeedGivesIdenticalCurvesAndReports) {
  const fs::path dir = scratch();
  std::ostringstream log;
  const TrainResult a = cmd_train(config(models::Task::kSegmentation, LossKind::kHetCls, dir / "a"), {}, log);
  const TrainResult b = cmd_train(config(models::Task::kSegmentation, LossKind::kHetCls, dir / "b"), {}, log);
  ASSERT_EQ(a.record.loss_curve.size(), 2u);
  EXPECT_EQ(a.record.loss_curve, b.record.loss_curve);
  EXPECT_EQ(read_file(dir / "a" / "metrics.json"), read_file(dir / "b" / "metrics.json"));
  EXPECT_EQ(read_file(dir / "a" / "model.ckpt"), read_file(dir / "b" / "model.ckpt"));

  ExperimentConfig other = config(models::Task::kSegmentation, LossKind::kHetCls, dir / "c");
  other.training.seed = 1;
  other.sync_model();
  const TrainResult c = cmd_train(other, {}, log);
  EXPECT_NE(a.record.loss_curve, c.record.loss_curve);
}

TEST_F(CliFixture, RunRecordReplaysBitExactly) {
  const fs::path dir = scratch();
  std::ostringstream log;
  const TrainResult a = cmd_train(config(models::Task::kReconstruction, LossKind::kHetReg, dir / "a"), {}, log);
  GlobalOptions replay;
  replay.config_path = a.record_path;
  replay.out = dir / "b";
  const TrainResult b = cmd_train(resolve_config(replay), replay, log);
  EXPECT_EQ(to_json(a.record.metrics), to_json(b.record.metrics));
  EXPECT_EQ(read_file(dir / "a" / "metrics.json"), read_file(dir / "b" / "metrics.json"));
  EXPECT_EQ(a.record.artifact_hashes.at("model.ckpt"), b.record.artifact_hashes.at("model.ckpt"));
}

TEST_F(CliFixture, RunRecordEchoesConfigAndHashesArtifacts) {
  const fs::path out = scratch() / "run";
  std::ostringstream log;
  const TrainResult r = cmd_train(config(models::Task::kSegmentation, LossKind::kHetCls, out), {}, log);
  const RunRecord back = read_run_record(r.record_path);
  EXPECT_EQ(to_json(back), to_json(r.record));
  EXPECT_EQ(to_json(back.config), to_json(r.record.config));
  ASSERT_TRUE(back.uncertainty.has_value());
  for (const auto& [file, hash] : back.artifact_hashes) {
    EXPECT_EQ(synthdata::sha256_file(out / file), hash) << file;
  }
  EXPECT_EQ(back.dataset_hash, synthdata::load_manifest(data_).dataset_hash);
  const auto report = metrics::read_report_json(out / "metrics.json");
  EXPECT_EQ(metrics::to_json(report), metrics::to_json(back.metrics));
}

TEST_F(CliFixture, NonFiniteLossAbortsWithBatchDiagnostics) {
  const ExperimentConfig c = config(models::Task::kSegmentation, LossKind::kCe, scratch());
  models::Model model(c.model);
  ndgrad::Tensor w;
  for (const auto& p : model.named_parameters()) {
    if (p.name == "pred_head.out.bias") w = p.value;
  }
  ASSERT_EQ(w.numel(), 2u);
  w.mutable_values()[0] = std::numeric_limits<double>::quiet_NaN();
  const auto samples = synthdata::load_split(synthdata::load_manifest(data_), synthdata::Split::kTrain);
  try {
    train_model(model, samples, c.training);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch 1"), std::string::npos) << what;
    EXPECT_NE(what.find("batch"), std::string::npos) << what;
    EXPECT_NE(what.find("input"), std::string::npos) << what;
  }
}

// The noise-aware regression loss at s = 0 is half the squared error, so
// training must end below half the MSE of the untrained network.
TEST_F(CliFixture, HeteroscedasticRegressionImprovesOnZeroLogVariance) {
  ExperimentConfig c = config(models::Task::kReconstruction, LossKind::kHetReg, scratch());
  c.training.epochs = 12;
  const auto samples = synthdata::load_split(synthdata::load_manifest(data_), synthdata::Split::kTrain);

  const models::Model initial(c.model);
  std::vector<const synthdata::Image*> in, target;
  for (const auto& s : samples) in.push_back(&s.degraded), target.push_back(&s.clean);
  const ndgrad::Tensor pred = initial.predict(stack_images(in)).prediction;
  const ndgrad::Tensor y = stack_images(target);
  double half_mse = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double r = y.values()[i] - pred.values()[i];
    half_mse += 0.5 * r * r;
  }
  half_mse /= static_cast<double>(y.numel());

  models::Model model(c.model);
  const TrainingResult r = train_model(model, samples, c.training);
  ASSERT_EQ(r.loss_curve.size(), 12u);
  EXPECT_LT(r.loss_curve.back(), half_mse);
}

// ---- evaluate / analyze ----

TEST_F(CliFixture, EvaluateRejectsTaskMismatchAndRefusesOverwrite) {
  const fs::path dir = scratch();
  std::ostringstream log;
  const TrainResult seg = cmd_train(config(models::Task::kSegmentation, LossKind::kCe, dir / "seg"), {}, log);

  const ExperimentConfig recon = config(models::Task::kReconstruction, LossKind::kMse, dir / "eval");
  EXPECT_THROW(cmd_evaluate(seg.checkpoint_path, recon, {}, log), InvalidArgument);

  const ExperimentConfig same = config(models::Task::kSegmentation, LossKind::kCe, dir / "eval");
  const auto report = cmd_evaluate(seg.checkpoint_path, same, {}, log);
  EXPECT_EQ(report.per_image, seg.record.metrics.per_image);
  EXPECT_TRUE(fs::exists(dir / "eval" / "metrics.csv"));
  EXPECT_THROW(cmd_evaluate(seg.checkpoint_path, same, {}, log), InvalidState);
  GlobalOptions force;
  force.force = true;
  EXPECT_NO_THROW(cmd_evaluate(seg.checkpoint_path, same, force, log));
}

TEST_F(CliFixture, EvaluateRejectsImageSizeMismatch) {
  const fs::path dir = scratch();
  ExperimentConfig c = config(models::Task::kSegmentation, LossKind::kCe, dir);
  c.model.height = c.model.width = 64;
  models::save_checkpoint(models::Model(c.model), dir / "m.ckpt");
  std::ostringstream log;
  EXPECT_THROW(cmd_evaluate(dir / "m.ckpt", c, {}, log), InvalidArgument);
}

TEST_F(CliFixture, AnalyzeUncertaintyWritesStatsPlotsAndHeatMaps) {
  const fs::path dir = scratch();
  std::ostringstream log;
  const TrainResult single = cmd_train(config(models::Task::kSegmentation, LossKind::kCe, dir / "s"), {}, log);
  const TrainResult dual = cmd_train(config(models::Task::kSegmentation, LossKind::kHetCls, dir / "d"), {}, log);

  const ExperimentConfig c = config(models::Task::kSegmentation, LossKind::kCe, dir / "u");
  EXPECT_THROW(cmd_analyze_uncertainty(single.checkpoint_path, c, UncertaintyMode::kData, 5, {}, log),
               InvalidState);

  const auto mc = cmd_analyze_uncertainty(single.checkpoint_path, c, UncertaintyMode::kModel, 4, {}, log);
  EXPECT_EQ(mc.per_image.size(), synthdata::load_manifest(data_).count(synthdata::Split::kTest));

  GlobalOptions force;
  force.force = true;
  const auto data = cmd_analyze_uncertainty(dual.checkpoint_path, c, UncertaintyMode::kData, 5, force, log);
  EXPECT_EQ(metrics::to_json(*dual.record.uncertainty), metrics::to_json(data.aggregate));
  for (const char* f : {"uncertainty.json", "uncertainty.csv", "uncertainty_fg_bg.svg",
                        "uncertainty_correct_incorrect.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "u" / f)) << f;
  }
  const auto doc = nlohmann::json::parse(read_file(dir / "u" / "uncertainty.json"));
  ASSERT_EQ(doc["per_image"].size(), data.per_image.size());
  for (std::size_t i = 0; i < data.per_image.size(); ++i) {
    const auto& entry = doc["per_image"][i];
    const auto& v = data.per_image[i].variance.pixels;
    EXPECT_DOUBLE_EQ(entry["heat_map_range"][0].get<double>(), *std::min_element(v.begin(), v.end()));
    EXPECT_DOUBLE_EQ(entry["heat_map_range"][1].get<double>(), *std::max_element(v.begin(), v.end()));
    EXPECT_TRUE(fs::exists(dir / "u" / entry["heat_map"].get<std::string>()));
  }
}

// ---- benchmark / compare ----

TEST_F(CliFixture, BenchmarkReportsThreeRowsAndRatios) {
  const fs::path dir = scratch();
  std::ostringstream log;
  const TrainResult r = cmd_train(config(models::Task::kSegmentation, LossKind::kCe, dir / "r"), {}, log);
  GlobalOptions g;
  g.out = dir / "bench";
  const BenchmarkResult b = cmd_benchmark_time(r.checkpoint_path, 5, 5, g, log);
  ASSERT_EQ(b.rows.size(), 3u);
  EXPECT_EQ(b.rows[2].passes, 5u);
  for (const auto& row : b.rows) EXPECT_EQ(row.summary.seconds.size(), 5u);
  EXPECT_DOUBLE_EQ(b.mc_over_single, b.rows[2].summary.median / b.rows[0].summary.median);
  EXPECT_DOUBLE_EQ(b.dual_over_single, b.rows[1].summary.median / b.rows[0].summary.median);
  EXPECT_NE(read_file(dir / "bench" / "timing.csv").find("MC dropout,5,"), std::string::npos);
}

TEST(SignTest, MatchesExactBinomialTails) {
  EXPECT_DOUBLE_EQ(sign_test_p_value(0, 0), 1.0);
  EXPECT_NEAR(sign_test_p_value(5, 0), 2.0 / 32.0, 1e-12);
  EXPECT_NEAR(sign_test_p_value(0, 5), 2.0 / 32.0, 1e-12);
  EXPECT_NEAR(sign_test_p_value(10, 2), 2.0 * (1 + 12 + 66) / 4096.0, 1e-12);
  EXPECT_NEAR(sign_test_p_value(3, 3), 1.0, 1e-12);
  EXPECT_NEAR(sign_test_p_value(1, 2), 1.0, 1e-12);
}

TEST_F(CliFixture, CompareRequiresSameDatasetAndPairsImages) {
  const fs::path dir = scratch();
  std::ostringstream log;
  const TrainResult a = cmd_train(config(models::Task::kSegmentation, LossKind::kCe, dir / "a"), {}, log);
  const TrainResult b = cmd_train(config(models::Task::kSegmentation, LossKind::kHetCls, dir / "b"), {}, log);

  GlobalOptions g;
  g.out = dir / "cmp";
  const ComparisonResult r = cmd_compare(a.record_path, b.record_path, g, log);
  EXPECT_EQ(r.paired_indices.size(), a.record.metrics.per_image.size());
  ASSERT_FALSE(r.metrics.empty());
  const MetricComparison& dice = r.metrics.front();
  EXPECT_EQ(dice.metric, "dice");
  EXPECT_EQ(dice.b_better + dice.a_better + dice.ties, r.paired_indices.size());
  EXPECT_NEAR(*dice.mean_difference, *dice.mean_b - *dice.mean_a, 1e-12);
  for (const char* f : {"comparison.json", "comparison.csv", "paired_differences.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "cmp" / f)) << f;
  }

  const ComparisonResult self = cmd_compare(a.record_path, a.record_path, {}, log);
  for (const auto& m : self.metrics) {
    EXPECT_EQ(m.ties, self.paired_indices.size()) << m.metric;
    EXPECT_DOUBLE_EQ(m.sign_test_p, 1.0);
  }

  RunRecord other = read_run_record(b.record_path);
  other.dataset_hash = "0000";
  write_run_record(other, dir / "other.json");
  EXPECT_THROW(cmd_compare(a.record_path, dir / "other.json", {}, log), InvalidArgument);
}

// ---- output handling and plots ----

TEST(Outputs, ExistingDirectoryNeedsForce) {
  const fs::path dir = scratch();
  EXPECT_NO_THROW(prepare_output_dir(dir / "fresh", false));
  std::ofstream(dir / "fresh" / "x") << "x";
  EXPECT_THROW(prepare_output_dir(dir / "fresh", false), InvalidState);
  EXPECT_NO_THROW(prepare_output_dir(dir / "fresh", true));

  ExperimentConfig c = small_config(dir / "fresh", models::Task::kSegmentation, LossKind::kCe);
  std::ostringstream log;
  EXPECT_THROW(cmd_generate(c, {}, log), InvalidState);
}

TEST(Plots, HeatMapNormalisesPerImage) {
  const fs::path dir = scratch();
  synthdata::Image img(2, 2);
  img.pixels = {0.5, 1.5, 1.0, 2.5};
  const HeatMapRange r = write_heat_map(img, dir / "h.pgm");
  EXPECT_DOUBLE_EQ(r.min, 0.5);
  EXPECT_DOUBLE_EQ(r.max, 2.5);
  const synthdata::Pgm pgm = synthdata::read_pgm(dir / "h.pgm");
  EXPECT_EQ(pgm.maxval, 65535);
  EXPECT_EQ(pgm.samples, (std::vector<std::uint16_t>{0, 32768, 16384, 65535}));

  synthdata::Image flat(1, 3, 0.2);
  write_heat_map(flat, dir / "f.pgm");
  EXPECT_EQ(synthdata::read_pgm(dir / "f.pgm").samples, (std::vector<std::uint16_t>{0, 0, 0}));
}

TEST(Plots, BarChartIsStandaloneSvg) {
  const std::string svg = svg_bar_chart("Mean variance", {{"foreground", 0.25}, {"background", 1.0}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("foreground"), std::string::npos);
  EXPECT_NE(svg.find("background"), std::string::npos);
  EXPECT_NE(svg.find("Mean variance"), std::string::npos);
}

// ---- binary ----

namespace {

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(FPU_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Binary, ExitCodesAndOneLineErrorClass) {
  const fs::path dir = scratch();
  std::ofstream(dir / "exp.ini") << "[dataset]\npath = data\ncount = 10\nheight = 32\nwidth = 32\n"
                                     "[training]\nepochs = 1\n[output]\ndir = run\n";
  const std::string cfg = "--config " + (dir / "exp.ini").string();

  EXPECT_EQ(run_cli(cfg + " generate", dir / "e0"), 0);
  EXPECT_NE(run_cli(cfg + " generate", dir / "e1"), 0);
  EXPECT_EQ(read_file(dir / "e1").rfind("invalid-state: ", 0), 0u) << read_file(dir / "e1");
  EXPECT_EQ(run_cli(cfg + " generate --force --threads 2", dir / "e2"), 0);
  EXPECT_EQ(run_cli(cfg + " train", dir / "e3"), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "run_record.json"));

  EXPECT_NE(run_cli(cfg + " analyze-uncertainty " + (dir / "run" / "model.ckpt").string(), dir / "e4"), 0);
  EXPECT_EQ(read_file(dir / "e4").rfind("invalid-state: ", 0), 0u) << read_file(dir / "e4");

  std::ofstream(dir / "bad.ini") << "[training]\nloss = mse\n";
  EXPECT_NE(run_cli("--config " + (dir / "bad.ini").string() + " train", dir / "e5"), 0);
  const std::string e5 = read_file(dir / "e5");
  EXPECT_EQ(e5.rfind("invalid-argument: ", 0), 0u) << e5;
  EXPECT_EQ(std::count(e5.begin(), e5.end(), '\n'), 1);

  EXPECT_NE(run_cli("", dir / "e6"), 0);
}
