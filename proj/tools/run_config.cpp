#include "run_config.hpp"

#include <cstdio>
#include <fstream>

#include <zlib.h>

namespace osmm::cli {

using nlohmann::json;

json default_config() {
  return json::parse(R"({
    "seed": 0,
    "out_dir": "out",
    "image": {"size": 64},
    "geometry": {"views": 120, "detectors": 0, "detector_offset": 0.0},
    "subsample": {"views": 10},
    "phantom": {"kind": "dataset"},
    "dataset": {"references": 4, "truth": 0, "ellipses": 6, "seed": 7},
    "schedule": {"sigma_min": 0.01, "sigma_max": 0.0, "steps": 200},
    "recon": {"subsets": 2, "variant": "OSMM", "score": "oracle", "checkpoint_dir": ""},
    "train": {"steps": 300, "batch_size": 8, "learning_rate": 0.01, "channels": 8, "embed": 16,
              "template_init": "mean"},
    "sweep": {"views": [10, 20], "subsets": [2, 3], "seeds": [0], "truths": []},
    "inputs": {"image": "", "sinogram": "", "measurement": "", "reference": "", "test": "", "ablation": ""},
    "png": {"lo": 0.0, "hi": 0.0}
  })");
}

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

const char* kind_name(const json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return "null";
}

bool compatible(const json& def, const json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_array()) return v.is_array();
  return def.type() == v.type();
}

void overlay(json& base, const json& user, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (!compatible(slot, it.value()))
      throw ConfigError("config key '" + key + "' must be " + kind_name(slot) + ", got " + kind_name(it.value()));
    if (slot.is_object())
      overlay(slot, it.value(), key);
    else
      slot = it.value();
  }
}

template <typename T>
std::vector<T> int_list(const json& arr, const std::string& key) {
  std::vector<T> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer() || arr[i].get<long long>() < 0)
      throw ConfigError("config key '" + key + "[" + std::to_string(i) + "]' must be a non-negative integer");
    out.push_back(arr[i].get<T>());
  }
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

std::filesystem::path input_or(const json& v, const std::filesystem::path& dir, const char* fallback) {
  const auto s = v.get<std::string>();
  return s.empty() ? dir / fallback : std::filesystem::path(s);
}

}  // namespace

json merge_config(const json& user) {
  if (!user.is_object()) throw ConfigError("config root must be a JSON object");
  json base = default_config();
  overlay(base, user, "");
  return base;
}

RunConfig resolve_config(const json& user, const Overrides& flags) {
  json j = merge_config(user);
  if (flags.seed) j["seed"] = *flags.seed;
  if (flags.out_dir) j["out_dir"] = *flags.out_dir;
  if (flags.views) j["subsample"]["views"] = *flags.views;
  if (flags.subsets) j["recon"]["subsets"] = *flags.subsets;
  if (flags.variant) j["recon"]["variant"] = *flags.variant;
  if (flags.steps) j["schedule"]["steps"] = *flags.steps;

  RunConfig c;
  require(j["seed"].get<long long>() >= 0, "seed", "must be non-negative");
  c.seed = j["seed"].get<std::uint64_t>();
  c.out_dir = j["out_dir"].get<std::string>();
  require(!c.out_dir.empty(), "out_dir", "must not be empty");

  c.image_size = j["image"]["size"].get<int>();
  require(c.image_size >= 16, "image.size", "must be at least 16");
  c.num_views = j["geometry"]["views"].get<int>();
  require(c.num_views >= 1, "geometry.views", "must be positive");
  c.detectors = j["geometry"]["detectors"].get<int>();
  require(c.detectors >= 0, "geometry.detectors", "must be 0 (automatic) or positive");
  c.detector_offset = j["geometry"]["detector_offset"].get<double>();

  c.views_kept = j["subsample"]["views"].get<int>();
  require(c.views_kept >= 1 && c.num_views % c.views_kept == 0, "subsample.views",
          "must divide geometry.views (" + std::to_string(c.num_views) + ")");

  c.phantom_kind = j["phantom"]["kind"].get<std::string>();
  require(c.phantom_kind == "dataset" || c.phantom_kind == "shepp-logan", "phantom.kind",
          "must be \"dataset\" or \"shepp-logan\"");

  c.references = j["dataset"]["references"].get<int>();
  require(c.references >= 1, "dataset.references", "must be positive");
  c.truth = j["dataset"]["truth"].get<int>();
  require(c.truth >= 0 && c.truth < c.references, "dataset.truth", "must index one of the references");
  c.ellipses = j["dataset"]["ellipses"].get<int>();
  require(c.ellipses >= 1, "dataset.ellipses", "must be positive");
  require(j["dataset"]["seed"].get<long long>() >= 0, "dataset.seed", "must be non-negative");
  c.dataset_seed = j["dataset"]["seed"].get<std::uint64_t>();

  c.sigma_min = j["schedule"]["sigma_min"].get<double>();
  require(c.sigma_min > 0, "schedule.sigma_min", "must be positive");
  c.sigma_max = j["schedule"]["sigma_max"].get<double>();
  require(c.sigma_max == 0 || c.sigma_max > c.sigma_min, "schedule.sigma_max",
          "must be 0 (automatic) or exceed schedule.sigma_min");
  c.steps = j["schedule"]["steps"].get<int>();
  require(c.steps >= 2, "schedule.steps", "must be at least 2");

  c.subsets = j["recon"]["subsets"].get<int>();
  require(c.subsets >= 1 && c.num_views % c.subsets == 0, "recon.subsets",
          "must divide geometry.views (" + std::to_string(c.num_views) + ")");
  try {
    c.variant = parse_variant(j["recon"]["variant"].get<std::string>());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'recon.variant': ") + e.what());
  }
  j["recon"]["variant"] = to_string(c.variant);
  c.score = j["recon"]["score"].get<std::string>();
  require(c.score == "oracle" || c.score == "checkpoint", "recon.score", "must be \"oracle\" or \"checkpoint\"");
  c.checkpoint_dir = input_or(j["recon"]["checkpoint_dir"], c.out_dir, "checkpoints");

  const json& t = j["train"];
  c.train.steps = t["steps"].get<int>();
  require(c.train.steps >= 1, "train.steps", "must be positive");
  c.train.batch_size = t["batch_size"].get<int>();
  require(c.train.batch_size >= 1, "train.batch_size", "must be positive");
  c.train.learning_rate = t["learning_rate"].get<double>();
  require(c.train.learning_rate > 0, "train.learning_rate", "must be positive");
  c.train.channels = t["channels"].get<int>();
  require(c.train.channels >= 1, "train.channels", "must be positive");
  c.train.embed = t["embed"].get<int>();
  require(c.train.embed >= 1, "train.embed", "must be positive");
  const auto init = t["template_init"].get<std::string>();
  require(init == "mean" || init == "zero", "train.template_init", "must be \"mean\" or \"zero\"");
  c.train.template_init = init == "mean" ? TemplateInit::DatasetMean : TemplateInit::Zero;
  c.train.seed = c.seed;

  c.sweep_views = int_list<int>(j["sweep"]["views"], "sweep.views");
  for (std::size_t i = 0; i < c.sweep_views.size(); ++i)
    require(c.sweep_views[i] >= 1 && c.num_views % c.sweep_views[i] == 0, "sweep.views[" + std::to_string(i) + "]",
            "must divide geometry.views");
  c.sweep_subsets = int_list<int>(j["sweep"]["subsets"], "sweep.subsets");
  for (std::size_t i = 0; i < c.sweep_subsets.size(); ++i)
    require(c.sweep_subsets[i] >= 1 && c.num_views % c.sweep_subsets[i] == 0,
            "sweep.subsets[" + std::to_string(i) + "]", "must divide geometry.views");
  c.sweep_seeds = int_list<std::uint64_t>(j["sweep"]["seeds"], "sweep.seeds");
  require(!c.sweep_seeds.empty(), "sweep.seeds", "must not be empty");
  c.sweep_truths = int_list<int>(j["sweep"]["truths"], "sweep.truths");
  for (std::size_t i = 0; i < c.sweep_truths.size(); ++i)
    require(c.sweep_truths[i] < c.references, "sweep.truths[" + std::to_string(i) + "]",
            "must index one of the references");

  const json& in = j["inputs"];
  c.input_image = input_or(in["image"], c.out_dir, "phantom.osmm");
  c.input_sinogram = input_or(in["sinogram"], c.out_dir, "sinogram.osmm");
  c.input_measurement = input_or(in["measurement"], c.out_dir, "measurement.osmm");
  c.input_reference = input_or(in["reference"], c.out_dir, "phantom.osmm");
  c.input_test = input_or(in["test"], c.out_dir, "recon.osmm");
  c.input_ablation = input_or(in["ablation"], c.out_dir, "ablation.csv");

  c.png_lo = j["png"]["lo"].get<double>();
  c.png_hi = j["png"]["hi"].get<double>();

  c.resolved = std::move(j);
  return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const Overrides& flags) {
  json user = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    try {
      user = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + file->string() + " is not valid JSON: " + e.what());
    }
  }
  return resolve_config(user, flags);
}

std::string config_hash(const json& resolved) {
  const std::string s = resolved.dump();
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(s.data()), uInt(s.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace osmm::cli
