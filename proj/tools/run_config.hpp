#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "osmm/dsm.hpp"
#include "osmm/recon.hpp"

namespace osmm::cli {

/// Flags that override config keys.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> views;
  std::optional<int> subsets;
  std::optional<std::string> variant;
  std::optional<int> steps;
};

struct RunConfig {
  nlohmann::json resolved;  // defaults + file + flags, as used

  std::uint64_t seed = 0;
  std::filesystem::path out_dir;

  int image_size = 64;
  int num_views = 120;
  int detectors = 0;  // 0: smallest odd count covering the diagonal
  double detector_offset = 0.0;

  int views_kept = 10;

  std::string phantom_kind = "dataset";

  int references = 4;
  int truth = 0;
  int ellipses = 6;
  std::uint64_t dataset_seed = 7;

  double sigma_min = 0.01;
  double sigma_max = 0.0;  // 0: automatic
  int steps = 200;

  int subsets = 2;
  Variant variant = Variant::Osmm;
  std::string score = "oracle";
  std::filesystem::path checkpoint_dir;

  TrainConfig train;

  std::vector<int> sweep_views;
  std::vector<int> sweep_subsets;
  std::vector<std::uint64_t> sweep_seeds;
  std::vector<int> sweep_truths;

  std::filesystem::path input_image, input_sinogram, input_measurement, input_reference, input_test, input_ablation;

  double png_lo = 0.0, png_hi = 0.0;  // hi <= lo: per-image min/max
};

/// The built-in defaults; every accepted key appears here.
nlohmann::json default_config();

/// Overlays `user` on the defaults. Unknown keys and type mismatches throw
/// ConfigError naming the dotted key path.
nlohmann::json merge_config(const nlohmann::json& user);

/// Merges, applies flag overrides, validates, and fills the typed fields.
RunConfig resolve_config(const nlohmann::json& user, const Overrides& flags);

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const Overrides& flags);

/// CRC-32 of the canonical (sorted, compact) JSON dump, as 8 hex digits.
std::string config_hash(const nlohmann::json& resolved);

}  // namespace osmm::cli
