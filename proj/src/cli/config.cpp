#include "fpu/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fpu/error.hpp"
#include "fpu/models/checkpoint.hpp"

namespace fpu::cli {

namespace {

using nlohmann::json;
using boost::property_tree::ptree;

const std::vector<std::string> kSegmentationMetrics = {"dice", "jaccard", "err", "hc", "mc"};
const std::vector<std::string> kReconstructionMetrics = {"psnr"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw InvalidArgument("config key " + key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw InvalidArgument("config key " + key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

synthdata::Range parse_range(const std::string& key, const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw InvalidArgument("config key " + key + ": expected 'lo, hi', got '" + text + "'");
  return {parse_double(key, parts[0]), parse_double(key, parts[1])};
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string format_range(const synthdata::Range& r) { return format_double(r.lo) + ", " + format_double(r.hi); }

// Name -> member for every sampling range, shared by the INI and JSON forms.
std::vector<std::pair<std::string, synthdata::Range synthdata::ParamRanges::*>> range_fields() {
  using R = synthdata::ParamRanges;
  return {{"ridge_frequency", &R::ridge_frequency},
          {"orientation_amplitude", &R::orientation_amplitude},
          {"mask_semi_axis_y", &R::mask_semi_axis_y},
          {"mask_semi_axis_x", &R::mask_semi_axis_x},
          {"mask_center_jitter", &R::mask_center_jitter},
          {"mask_rotation", &R::mask_rotation},
          {"gaussian_noise_std", &R::gaussian_noise_std},
          {"blur_sigma", &R::blur_sigma},
          {"occlusion_count", &R::occlusion_count},
          {"occlusion_radius", &R::occlusion_radius},
          {"dryness_gap_rate", &R::dryness_gap_rate},
          {"background_texture_gain", &R::background_texture_gain}};
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kMse:
      return "mse";
    case LossKind::kCe:
      return "ce";
    case LossKind::kHetReg:
      return "het_reg";
    case LossKind::kHetCls:
      return "het_cls";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& text) {
  for (LossKind k : {LossKind::kMse, LossKind::kCe, LossKind::kHetReg, LossKind::kHetCls}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgument("unknown loss '" + text + "' (expected mse, ce, het_reg or het_cls)");
}

void ExperimentConfig::sync_model() {
  model.height = dataset.generation.height;
  model.width = dataset.generation.width;
  model.seed = training.seed;
}

std::vector<std::string> ExperimentConfig::resolved_metrics() const {
  if (!evaluation.metrics.empty()) return evaluation.metrics;
  return model.task == models::Task::kSegmentation ? kSegmentationMetrics : kReconstructionMetrics;
}

void ExperimentConfig::validate() const {
  const bool segmentation = model.task == models::Task::kSegmentation;
  const LossKind loss = training.loss;
  const bool classification_loss = loss == LossKind::kCe || loss == LossKind::kHetCls;
  if (classification_loss != segmentation) {
    throw InvalidArgument("loss " + to_string(loss) + " does not match task " + models::to_string(model.task) +
                          " (ce/het_cls need segmentation, mse/het_reg need reconstruction)");
  }
  const bool heteroscedastic = loss == LossKind::kHetReg || loss == LossKind::kHetCls;
  const bool dual = model.head_mode == models::HeadMode::kDual;
  if (heteroscedastic != dual) {
    throw InvalidArgument("loss " + to_string(loss) + " requires head_mode " + (heteroscedastic ? "dual" : "single") +
                          ", config has " + models::to_string(model.head_mode));
  }
  model.validate();
  dataset.generation.ranges.validate();
  if (dataset.generation.count < 2) throw InvalidArgument("dataset.count must be at least 2");
  if (!(dataset.generation.split_ratio > 0.0 && dataset.generation.split_ratio < 1.0)) {
    throw InvalidArgument("dataset.split_ratio must lie in (0, 1)");
  }
  if (training.batch_size == 0) throw InvalidArgument("training.batch_size must be positive");
  if (!(training.learning_rate > 0.0)) throw InvalidArgument("training.learning_rate must be positive");
  if (training.samples == 0) throw InvalidArgument("training.samples must be positive");
  if (!(evaluation.threshold >= 0.0 && evaluation.threshold <= 1.0)) {
    throw InvalidArgument("evaluation.threshold must lie in [0, 1]");
  }
  if (evaluation.patch == 0) throw InvalidArgument("evaluation.patch must be positive");
  if (evaluation.mc_passes < 2) throw InvalidArgument("evaluation.mc_passes must be at least 2");
  const auto& allowed = segmentation ? kSegmentationMetrics : kReconstructionMetrics;
  for (const auto& m : evaluation.metrics) {
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
      throw InvalidArgument("metric '" + m + "' is not available for task " + models::to_string(model.task));
    }
  }
  if (segmentation && (dataset.generation.height % evaluation.patch != 0 ||
                       dataset.generation.width % evaluation.patch != 0)) {
    const auto metrics = resolved_metrics();
    if (std::find(metrics.begin(), metrics.end(), "err") != metrics.end()) {
      throw InvalidArgument("image size is not divisible by evaluation.patch");
    }
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message(), 0);
  }

  ExperimentConfig c;
  synthdata::DatasetOptions& gen = c.dataset.generation;
  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  std::map<std::string, std::map<std::string, Setter>> schema;
  auto& ds = schema["dataset"];
  ds["path"] = [&](auto&, auto& v) { c.dataset.path = trim(v); };
  ds["count"] = [&](auto& k, auto& v) { gen.count = parse_u64(k, v); };
  ds["height"] = [&](auto& k, auto& v) { gen.height = parse_u64(k, v); };
  ds["width"] = [&](auto& k, auto& v) { gen.width = parse_u64(k, v); };
  ds["split_ratio"] = [&](auto& k, auto& v) { gen.split_ratio = parse_double(k, v); };
  ds["seed"] = [&](auto& k, auto& v) { gen.seed = parse_u64(k, v); };
  for (const auto& [name, member] : range_fields()) {
    ds[name] = [&gen, member](auto& k, auto& v) { gen.ranges.*member = parse_range(k, v); };
  }
  auto& md = schema["model"];
  md["task"] = [&](auto&, auto& v) { c.model.task = models::parse_task(trim(v)); };
  md["head_mode"] = [&](auto&, auto& v) { c.model.head_mode = models::parse_head_mode(trim(v)); };
  md["base_channels"] = [&](auto& k, auto& v) { c.model.base_channels = parse_u64(k, v); };
  md["depth"] = [&](auto& k, auto& v) { c.model.depth = parse_u64(k, v); };
  md["dropout_rate"] = [&](auto& k, auto& v) { c.model.dropout_rate = parse_double(k, v); };
  auto& tr = schema["training"];
  tr["loss"] = [&](auto&, auto& v) { c.training.loss = parse_loss_kind(trim(v)); };
  tr["epochs"] = [&](auto& k, auto& v) { c.training.epochs = parse_u64(k, v); };
  tr["batch_size"] = [&](auto& k, auto& v) { c.training.batch_size = parse_u64(k, v); };
  tr["learning_rate"] = [&](auto& k, auto& v) { c.training.learning_rate = parse_double(k, v); };
  tr["samples"] = [&](auto& k, auto& v) { c.training.samples = parse_u64(k, v); };
  tr["seed"] = [&](auto& k, auto& v) { c.training.seed = parse_u64(k, v); };
  auto& ev = schema["evaluation"];
  ev["metrics"] = [&](auto&, auto& v) { c.evaluation.metrics = split_list(v); };
  ev["threshold"] = [&](auto& k, auto& v) { c.evaluation.threshold = parse_double(k, v); };
  ev["patch"] = [&](auto& k, auto& v) { c.evaluation.patch = parse_u64(k, v); };
  ev["mc_passes"] = [&](auto& k, auto& v) { c.evaluation.mc_passes = parse_u64(k, v); };
  schema["output"]["dir"] = [&](auto&, auto& v) { c.output_dir = trim(v); };

  for (const auto& [section, keys] : tree) {
    const auto found = schema.find(section);
    if (found == schema.end()) {
      if (keys.empty()) throw InvalidArgument("config: key '" + section + "' outside a section");
      throw InvalidArgument("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      const auto setter = found->second.find(key);
      if (setter == found->second.end()) throw InvalidArgument("config: unknown key " + section + "." + key);
      setter->second(section + "." + key, value.data());
    }
  }
  if (c.dataset.path.is_relative()) c.dataset.path = base_dir / c.dataset.path;
  if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
  c.sync_model();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open config: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

std::string to_ini(const ExperimentConfig& c) {
  const synthdata::DatasetOptions& g = c.dataset.generation;
  std::ostringstream out;
  out << "[dataset]\n"
      << "path = " << c.dataset.path.string() << "\n"
      << "count = " << g.count << "\n"
      << "height = " << g.height << "\n"
      << "width = " << g.width << "\n"
      << "split_ratio = " << format_double(g.split_ratio) << "\n"
      << "seed = " << g.seed << "\n";
  for (const auto& [name, member] : range_fields()) out << name << " = " << format_range(g.ranges.*member) << "\n";
  out << "\n[model]\n"
      << "task = " << models::to_string(c.model.task) << "\n"
      << "head_mode = " << models::to_string(c.model.head_mode) << "\n"
      << "base_channels = " << c.model.base_channels << "\n"
      << "depth = " << c.model.depth << "\n"
      << "dropout_rate = " << format_double(c.model.dropout_rate) << "\n"
      << "\n[training]\n"
      << "loss = " << to_string(c.training.loss) << "\n"
      << "epochs = " << c.training.epochs << "\n"
      << "batch_size = " << c.training.batch_size << "\n"
      << "learning_rate = " << format_double(c.training.learning_rate) << "\n"
      << "samples = " << c.training.samples << "\n"
      << "seed = " << c.training.seed << "\n"
      << "\n[evaluation]\n"
      << "metrics = ";
  for (std::size_t i = 0; i < c.evaluation.metrics.size(); ++i) out << (i ? ", " : "") << c.evaluation.metrics[i];
  out << "\nthreshold = " << format_double(c.evaluation.threshold) << "\n"
      << "patch = " << c.evaluation.patch << "\n"
      << "mc_passes = " << c.evaluation.mc_passes << "\n"
      << "\n[output]\n"
      << "dir = " << c.output_dir.string() << "\n";
  return out.str();
}

json to_json(const ExperimentConfig& c) {
  return {{"dataset", {{"path", c.dataset.path.string()}, {"generation", synthdata::to_json(c.dataset.generation)}}},
          {"model", models::config_to_json(c.model)},
          {"training",
           {{"loss", to_string(c.training.loss)},
            {"epochs", c.training.epochs},
            {"batch_size", c.training.batch_size},
            {"learning_rate", c.training.learning_rate},
            {"samples", c.training.samples},
            {"seed", c.training.seed}}},
          {"evaluation",
           {{"metrics", c.evaluation.metrics},
            {"threshold", c.evaluation.threshold},
            {"patch", c.evaluation.patch},
            {"mc_passes", c.evaluation.mc_passes}}},
          {"output", {{"dir", c.output_dir.string()}}}};
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.dataset.path = j.at("dataset").at("path").get<std::string>();
    c.dataset.generation = synthdata::dataset_options_from_json(j.at("dataset").at("generation"));
    c.model = models::config_from_json(j.at("model"));
    const json& t = j.at("training");
    c.training.loss = parse_loss_kind(t.at("loss").get<std::string>());
    c.training.epochs = t.at("epochs").get<std::size_t>();
    c.training.batch_size = t.at("batch_size").get<std::size_t>();
    c.training.learning_rate = t.at("learning_rate").get<double>();
    c.training.samples = t.at("samples").get<std::size_t>();
    c.training.seed = t.at("seed").get<std::uint64_t>();
    const json& e = j.at("evaluation");
    c.evaluation.metrics = e.at("metrics").get<std::vector<std::string>>();
    c.evaluation.threshold = e.at("threshold").get<double>();
    c.evaluation.patch = e.at("patch").get<std::size_t>();
    c.evaluation.mc_passes = e.at("mc_passes").get<std::size_t>();
    c.output_dir = j.at("output").at("dir").get<std::string>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed experiment config: ") + e.what(), 0);
  }
}

}  // namespace fpu::cli
