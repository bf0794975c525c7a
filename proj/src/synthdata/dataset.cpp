#include "fpu/synthdata/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numeric>
#include <thread>

#include "fpu/error.hpp"
#include "fpu/synthdata/pgm.hpp"

namespace fpu::synthdata {

namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;
constexpr std::uint64_t kSplitStream = 0x5b117;
constexpr std::size_t kOrientationHarmonics = 3;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("failed writing: " + path.string());
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": invalid JSON", e.byte);
  }
}

// Runs fn, turning missing or mistyped JSON fields into ParseError.
template <typename F>
auto with_json_errors(const std::string& source, F&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what(), 0);
  }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }
Range range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::string stem_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05zu", index);
  return buf;
}

}  // namespace

const char* to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + text + "' (expected train or test)");
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.split == split; }));
}

void ParamRanges::validate() const {
  const std::pair<const Range*, const char*> all[] = {
      {&ridge_frequency, "ridge_frequency"},
      {&orientation_amplitude, "orientation_amplitude"},
      {&mask_semi_axis_y, "mask_semi_axis_y"},
      {&mask_semi_axis_x, "mask_semi_axis_x"},
      {&mask_center_jitter, "mask_center_jitter"},
      {&mask_rotation, "mask_rotation"},
      {&gaussian_noise_std, "gaussian_noise_std"},
      {&blur_sigma, "blur_sigma"},
      {&occlusion_count, "occlusion_count"},
      {&occlusion_radius, "occlusion_radius"},
      {&dryness_gap_rate, "dryness_gap_rate"},
      {&background_texture_gain, "background_texture_gain"},
  };
  for (const auto& [range, name] : all) {
    if (!(range->lo <= range->hi)) throw InvalidArgument(std::string("range ") + name + " has lo > hi");
  }
  if (!(ridge_frequency.lo > 0.0 && ridge_frequency.hi < 0.5)) {
    throw InvalidArgument("ridge_frequency range must lie inside (0, 0.5)");
  }
  if (!(mask_semi_axis_y.lo > 0.0 && mask_semi_axis_x.lo > 0.0)) {
    throw InvalidArgument("mask semi-axis ranges must be positive");
  }
  for (const Range* r : {&gaussian_noise_std, &blur_sigma, &occlusion_count, &occlusion_radius, &background_texture_gain,
                         &orientation_amplitude}) {
    if (r->lo < 0.0) throw InvalidArgument("degradation ranges must be non-negative");
  }
  if (dryness_gap_rate.hi > 1.0) throw InvalidArgument("dryness_gap_rate range must lie in [0, 1]");
}

std::pair<RidgeParams, DegradationParams> draw_sample_params(const DatasetOptions& options, std::size_t index) {
  const ParamRanges& g = options.ranges;
  ndgrad::Rng rng = ndgrad::Rng::substream(options.seed, index);
  const double h = static_cast<double>(options.height);
  const double w = static_cast<double>(options.width);

  RidgeParams ridge;
  ridge.height = options.height;
  ridge.width = options.width;
  ridge.seed = ndgrad::hash_combine(options.seed, index);
  ridge.ridge_frequency = g.ridge_frequency.draw(rng);
  const double amplitude = g.orientation_amplitude.draw(rng);
  ridge.orientation = random_orientation_field(rng, kOrientationHarmonics, amplitude);
  ridge.mask_shape.center_y = h * (0.5 + g.mask_center_jitter.draw(rng));
  ridge.mask_shape.center_x = w * (0.5 + g.mask_center_jitter.draw(rng));
  ridge.mask_shape.semi_axis_y = h * g.mask_semi_axis_y.draw(rng);
  ridge.mask_shape.semi_axis_x = w * g.mask_semi_axis_x.draw(rng);
  ridge.mask_shape.rotation = g.mask_rotation.draw(rng);

  DegradationParams deg;
  deg.seed = ndgrad::hash_combine(ridge.seed, 1);
  deg.gaussian_noise_std = g.gaussian_noise_std.draw(rng);
  deg.blur_sigma = g.blur_sigma.draw(rng);
  const auto lo = static_cast<std::size_t>(std::ceil(g.occlusion_count.lo));
  const auto hi = static_cast<std::size_t>(std::floor(g.occlusion_count.hi));
  deg.occlusion_count = hi > lo ? lo + static_cast<std::size_t>(rng.below(hi - lo + 1)) : lo;
  deg.occlusion_radius_min = g.occlusion_radius.lo;
  deg.occlusion_radius_max = g.occlusion_radius.hi;
  deg.dryness_gap_rate = g.dryness_gap_rate.draw(rng);
  deg.background_texture_gain = g.background_texture_gain.draw(rng);
  return {ridge, deg};
}

Sample make_sample(const RidgeParams& ridge, const DegradationParams& degradation) {
  auto [clean, mask] = generate_clean(ridge);
  Image degraded = degrade(clean, mask, degradation, ndgrad::Rng(degradation.seed));
  return {std::move(degraded), std::move(clean), std::move(mask), ridge, degradation};
}

std::vector<Split> assign_splits(std::size_t count, double split_ratio, std::uint64_t seed) {
  if (count < 2) throw InvalidArgument("a dataset needs at least 2 samples");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw InvalidArgument("split_ratio must lie in (0, 1)");
  const auto train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(count * split_ratio)), 1, count - 1);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  ndgrad::Rng rng = ndgrad::Rng::substream(seed, kSplitStream);
  for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<Split> splits(count, Split::kTest);
  for (std::size_t k = 0; k < train; ++k) splits[order[k]] = Split::kTrain;
  return splits;
}

json to_json(const RidgeParams& p) {
  json harmonics = json::array();
  for (const auto& h : p.orientation.harmonics) {
    harmonics.push_back({{"amplitude", h.amplitude}, {"fy", h.fy}, {"fx", h.fx}, {"phase", h.phase}});
  }
  return {{"height", p.height},
          {"width", p.width},
          {"ridge_frequency", p.ridge_frequency},
          {"orientation", {{"base_angle", p.orientation.base_angle}, {"harmonics", harmonics}}},
          {"mask",
           {{"center_y", p.mask_shape.center_y},
            {"center_x", p.mask_shape.center_x},
            {"semi_axis_y", p.mask_shape.semi_axis_y},
            {"semi_axis_x", p.mask_shape.semi_axis_x},
            {"rotation", p.mask_shape.rotation}}},
          {"seed", p.seed}};
}

json to_json(const DegradationParams& p) {
  return {{"gaussian_noise_std", p.gaussian_noise_std},
          {"occlusion_count", p.occlusion_count},
          {"occlusion_radius_min", p.occlusion_radius_min},
          {"occlusion_radius_max", p.occlusion_radius_max},
          {"blur_sigma", p.blur_sigma},
          {"dryness_gap_rate", p.dryness_gap_rate},
          {"background_texture_gain", p.background_texture_gain},
          {"seed", p.seed}};
}

json to_json(const DatasetOptions& o) {
  const ParamRanges& g = o.ranges;
  return {{"count", o.count},
          {"height", o.height},
          {"width", o.width},
          {"split_ratio", o.split_ratio},
          {"seed", o.seed},
          {"ranges",
           {{"ridge_frequency", range_json(g.ridge_frequency)},
            {"orientation_amplitude", range_json(g.orientation_amplitude)},
            {"mask_semi_axis_y", range_json(g.mask_semi_axis_y)},
            {"mask_semi_axis_x", range_json(g.mask_semi_axis_x)},
            {"mask_center_jitter", range_json(g.mask_center_jitter)},
            {"mask_rotation", range_json(g.mask_rotation)},
            {"gaussian_noise_std", range_json(g.gaussian_noise_std)},
            {"blur_sigma", range_json(g.blur_sigma)},
            {"occlusion_count", range_json(g.occlusion_count)},
            {"occlusion_radius", range_json(g.occlusion_radius)},
            {"dryness_gap_rate", range_json(g.dryness_gap_rate)},
            {"background_texture_gain", range_json(g.background_texture_gain)}}}};
}

RidgeParams ridge_params_from_json(const json& j) {
  RidgeParams p;
  p.height = j.at("height").get<std::size_t>();
  p.width = j.at("width").get<std::size_t>();
  p.ridge_frequency = j.at("ridge_frequency").get<double>();
  p.orientation.base_angle = j.at("orientation").at("base_angle").get<double>();
  for (const auto& h : j.at("orientation").at("harmonics")) {
    p.orientation.harmonics.push_back(
        {h.at("amplitude").get<double>(), h.at("fy").get<double>(), h.at("fx").get<double>(), h.at("phase").get<double>()});
  }
  const json& m = j.at("mask");
  p.mask_shape = {m.at("center_y").get<double>(), m.at("center_x").get<double>(), m.at("semi_axis_y").get<double>(),
                  m.at("semi_axis_x").get<double>(), m.at("rotation").get<double>()};
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

DegradationParams degradation_params_from_json(const json& j) {
  DegradationParams p;
  p.gaussian_noise_std = j.at("gaussian_noise_std").get<double>();
  p.occlusion_count = j.at("occlusion_count").get<std::size_t>();
  p.occlusion_radius_min = j.at("occlusion_radius_min").get<double>();
  p.occlusion_radius_max = j.at("occlusion_radius_max").get<double>();
  p.blur_sigma = j.at("blur_sigma").get<double>();
  p.dryness_gap_rate = j.at("dryness_gap_rate").get<double>();
  p.background_texture_gain = j.at("background_texture_gain").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

DatasetOptions dataset_options_from_json(const json& j) {
  DatasetOptions o;
  o.count = j.at("count").get<std::size_t>();
  o.height = j.at("height").get<std::size_t>();
  o.width = j.at("width").get<std::size_t>();
  o.split_ratio = j.at("split_ratio").get<double>();
  o.seed = j.at("seed").get<std::uint64_t>();
  const json& r = j.at("ranges");
  ParamRanges& g = o.ranges;
  g.ridge_frequency = range_from(r.at("ridge_frequency"));
  g.orientation_amplitude = range_from(r.at("orientation_amplitude"));
  g.mask_semi_axis_y = range_from(r.at("mask_semi_axis_y"));
  g.mask_semi_axis_x = range_from(r.at("mask_semi_axis_x"));
  g.mask_center_jitter = range_from(r.at("mask_center_jitter"));
  g.mask_rotation = range_from(r.at("mask_rotation"));
  g.gaussian_noise_std = range_from(r.at("gaussian_noise_std"));
  g.blur_sigma = range_from(r.at("blur_sigma"));
  g.occlusion_count = range_from(r.at("occlusion_count"));
  g.occlusion_radius = range_from(r.at("occlusion_radius"));
  g.dryness_gap_rate = range_from(r.at("dryness_gap_rate"));
  g.background_texture_gain = range_from(r.at("background_texture_gain"));
  return o;
}

void save_sample(const std::filesystem::path& dir, const std::string& stem, const Sample& sample) {
  write_pgm(dir / (stem + "_degraded.pgm"), to_pgm16(sample.degraded));
  write_pgm(dir / (stem + "_clean.pgm"), to_pgm16(sample.clean));
  write_pgm(dir / (stem + "_mask.pgm"), mask_to_pgm8(sample.mask));
  const json meta = {{"ridge_params", to_json(sample.ridge_params)},
                     {"degradation_params", to_json(sample.degradation_params)}};
  write_file(dir / (stem + ".json"), meta.dump(2) + "\n");
}

Sample load_sample(const std::filesystem::path& dir, const std::string& stem) {
  Sample s;
  s.degraded = from_pgm16(read_pgm(dir / (stem + "_degraded.pgm")));
  s.clean = from_pgm16(read_pgm(dir / (stem + "_clean.pgm")));
  s.mask = mask_from_pgm8(read_pgm(dir / (stem + "_mask.pgm")));
  const auto meta_path = dir / (stem + ".json");
  const json meta = parse_json(read_file(meta_path), meta_path.string());
  with_json_errors(meta_path.string(), [&] {
    s.ridge_params = ridge_params_from_json(meta.at("ridge_params"));
    s.degradation_params = degradation_params_from_json(meta.at("degradation_params"));
    return 0;
  });
  if (s.clean.height != s.mask.height || s.clean.width != s.mask.width || s.degraded.height != s.mask.height ||
      s.degraded.width != s.mask.width) {
    throw InvalidArgument("sample " + stem + " has inconsistent image sizes");
  }
  return s;
}

DatasetManifest generate_dataset(const std::filesystem::path& dir, const DatasetOptions& options) {
  options.ranges.validate();
  if (options.height == 0 || options.width == 0) throw InvalidArgument("image size must be positive");
  const std::vector<Split> splits = assign_splits(options.count, options.split_ratio, options.seed);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < options.count; i = next++) {
      try {
        const auto [ridge, deg] = draw_sample_params(options, i);
        save_sample(dir, stem_for(i), make_sample(ridge, deg));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.count;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, options.count);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  DatasetManifest manifest;
  manifest.root = dir;
  manifest.options = options;
  std::string all_hashes;
  for (std::size_t i = 0; i < options.count; ++i) {
    ManifestEntry e;
    e.index = i;
    e.split = splits[i];
    const std::string stem = stem_for(i);
    e.degraded_file = stem + "_degraded.pgm";
    e.clean_file = stem + "_clean.pgm";
    e.mask_file = stem + "_mask.pgm";
    e.metadata_file = stem + ".json";
    e.degraded_sha256 = sha256_file(dir / e.degraded_file);
    e.clean_sha256 = sha256_file(dir / e.clean_file);
    e.mask_sha256 = sha256_file(dir / e.mask_file);
    e.metadata_sha256 = sha256_file(dir / e.metadata_file);
    all_hashes += std::string(to_string(e.split)) + e.degraded_sha256 + e.clean_sha256 + e.mask_sha256 +
                  e.metadata_sha256;
    manifest.entries.push_back(std::move(e));
  }
  manifest.dataset_hash = sha256_hex(all_hashes);

  json samples = json::array();
  for (const auto& e : manifest.entries) {
    samples.push_back({{"index", e.index},
                       {"split", to_string(e.split)},
                       {"files",
                        {{"degraded", {{"path", e.degraded_file}, {"sha256", e.degraded_sha256}}},
                         {"clean", {{"path", e.clean_file}, {"sha256", e.clean_sha256}}},
                         {"mask", {{"path", e.mask_file}, {"sha256", e.mask_sha256}}},
                         {"metadata", {{"path", e.metadata_file}, {"sha256", e.metadata_sha256}}}}}});
  }
  const json doc = {{"version", kManifestVersion},
                    {"options", to_json(options)},
                    {"dataset_hash", manifest.dataset_hash},
                    {"samples", samples}};
  write_file(dir / kManifestFile, doc.dump(2) + "\n");
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  const json doc = parse_json(read_file(path), path.string());
  return with_json_errors(path.string(), [&] {
    if (doc.at("version").get<int>() != kManifestVersion) throw ParseError(path.string() + ": unsupported version", 0);
    DatasetManifest m;
    m.root = dir;
    m.options = dataset_options_from_json(doc.at("options"));
    m.dataset_hash = doc.at("dataset_hash").get<std::string>();
    for (const auto& s : doc.at("samples")) {
      ManifestEntry e;
      e.index = s.at("index").get<std::size_t>();
      e.split = parse_split(s.at("split").get<std::string>());
      const json& f = s.at("files");
      e.degraded_file = f.at("degraded").at("path").get<std::string>();
      e.degraded_sha256 = f.at("degraded").at("sha256").get<std::string>();
      e.clean_file = f.at("clean").at("path").get<std::string>();
      e.clean_sha256 = f.at("clean").at("sha256").get<std::string>();
      e.mask_file = f.at("mask").at("path").get<std::string>();
      e.mask_sha256 = f.at("mask").at("sha256").get<std::string>();
      e.metadata_file = f.at("metadata").at("path").get<std::string>();
      e.metadata_sha256 = f.at("metadata").at("sha256").get<std::string>();
      m.entries.push_back(std::move(e));
    }
    return m;
  });
}

void verify_manifest(const DatasetManifest& manifest) {
  for (const auto& e : manifest.entries) {
    const std::pair<const std::string*, const std::string*> files[] = {{&e.degraded_file, &e.degraded_sha256},
                                                                       {&e.clean_file, &e.clean_sha256},
                                                                       {&e.mask_file, &e.mask_sha256},
                                                                       {&e.metadata_file, &e.metadata_sha256}};
    for (const auto& [file, hash] : files) {
      const auto path = manifest.root / *file;
      if (sha256_file(path) != *hash) throw ChecksumMismatch("content hash differs from manifest: " + path.string());
    }
  }
}

Sample load_entry(const DatasetManifest& manifest, const ManifestEntry& entry) {
  const std::string& meta = entry.metadata_file;
  return load_sample(manifest.root, meta.substr(0, meta.size() - 5));
}

std::vector<Sample> load_split(const DatasetManifest& manifest, Split split) {
  std::vector<Sample> out;
  for (const auto& e : manifest.entries) {
    if (e.split == split) out.push_back(load_entry(manifest, e));
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw InvalidState("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace fpu::synthdata
