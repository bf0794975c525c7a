#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpu/synthdata/degrade.hpp"
#include "fpu/synthdata/image.hpp"
#include "fpu/synthdata/ridge.hpp"

namespace fpu::synthdata {

struct Sample {
  Image degraded;
  Image clean;
  Image mask;
  RidgeParams ridge_params;
  DegradationParams degradation_params;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double draw(ndgrad::Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Uniform sampling ranges. Axes and centre jitter are fractions of the image side.
struct ParamRanges {
  Range ridge_frequency{0.08, 0.125};
  Range orientation_amplitude{0.0, 3.0};  // pixels
  Range mask_semi_axis_y{0.40, 0.48};
  Range mask_semi_axis_x{0.32, 0.40};
  Range mask_center_jitter{-0.05, 0.05};
  Range mask_rotation{-0.4, 0.4};
  Range gaussian_noise_std{0.02, 0.12};
  Range blur_sigma{0.0, 1.0};
  Range occlusion_count{0.0, 3.0};  // drawn as an integer in [lo, hi]
  Range occlusion_radius{2.0, 6.0};
  Range dryness_gap_rate{0.0, 0.3};
  Range background_texture_gain{0.3, 0.7};

  void validate() const;
};

struct DatasetOptions {
  std::size_t count = 250;
  std::size_t height = 64;
  std::size_t width = 64;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  ParamRanges ranges;
  std::size_t threads = 1;
};

enum class Split { kTrain, kTest };
const char* to_string(Split split);
Split parse_split(const std::string& text);

struct ManifestEntry {
  std::size_t index = 0;
  Split split = Split::kTrain;
  std::string degraded_file;
  std::string clean_file;
  std::string mask_file;
  std::string metadata_file;
  std::string degraded_sha256;
  std::string clean_sha256;
  std::string mask_sha256;
  std::string metadata_sha256;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding manifest.json; not serialised
  DatasetOptions options;
  std::vector<ManifestEntry> entries;
  // SHA-256 over all per-file hashes in index order; identifies the dataset.
  std::string dataset_hash;

  std::size_t count(Split split) const;
};

inline constexpr const char* kManifestFile = "manifest.json";

// Draws parameters for sample `index` from its (seed, index) substream.
std::pair<RidgeParams, DegradationParams> draw_sample_params(const DatasetOptions& options, std::size_t index);
Sample make_sample(const RidgeParams& ridge, const DegradationParams& degradation);

// Train/test assignment: a seeded shuffle of the indices, of which the first
// round(count * split_ratio) (clamped to [1, count-1]) are training samples.
std::vector<Split> assign_splits(std::size_t count, double split_ratio, std::uint64_t seed);

// Writes every sample plus manifest.json into `dir` (created if needed).
// Samples are independent, so any thread count produces identical bytes.
DatasetManifest generate_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

// Reads manifest.json from `dir`.
DatasetManifest load_manifest(const std::filesystem::path& dir);
// Rehashes every listed file; throws ChecksumMismatch naming the first offender.
void verify_manifest(const DatasetManifest& manifest);

// Files are <stem>_degraded.pgm, <stem>_clean.pgm, <stem>_mask.pgm and <stem>.json.
void save_sample(const std::filesystem::path& dir, const std::string& stem, const Sample& sample);
Sample load_sample(const std::filesystem::path& dir, const std::string& stem);

Sample load_entry(const DatasetManifest& manifest, const ManifestEntry& entry);
std::vector<Sample> load_split(const DatasetManifest& manifest, Split split);

nlohmann::json to_json(const RidgeParams& params);
nlohmann::json to_json(const DegradationParams& params);
nlohmann::json to_json(const DatasetOptions& options);
RidgeParams ridge_params_from_json(const nlohmann::json& j);
DegradationParams degradation_params_from_json(const nlohmann::json& j);
DatasetOptions dataset_options_from_json(const nlohmann::json& j);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace fpu::synthdata
