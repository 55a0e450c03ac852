#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <zlib.h>

#include "osmm/array_file.hpp"
#include "osmm/experiment.hpp"
#include "osmm/phantom.hpp"
#include "osmm/png.hpp"
#include "osmm/tomo.hpp"

#ifndef OSMM_VERSION
#define OSMM_VERSION "unknown"
#endif

namespace osmm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string crc_hex(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), uInt(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

class Run {
 public:
  Run(std::string command, const RunConfig& cfg, std::ostream& log) : command_(std::move(command)), cfg_(cfg), log_(log) {
    fs::create_directories(cfg.out_dir);
  }

  fs::path path(const std::string& name) const { return cfg_.out_dir / name; }

  void wrote(const fs::path& p) {
    outputs_.push_back(p);
    log_ << "wrote " << p.string() << '\n';
  }
  void warn(const std::string& w) {
    warnings_.push_back(w);
    log_ << "warning: " << w << '\n';
  }
  json& extra() { return extra_; }

  void finish() {
    json m;
    m["command"] = command_;
    m["version"] = OSMM_VERSION;
    // the output location is not part of the run's identity
    json cfg = cfg_.resolved;
    cfg.erase("out_dir");
    m["config"] = cfg;
    m["config_hash"] = config_hash(cfg);
    m["seeds"] = {{"run", cfg_.seed}, {"dataset", cfg_.dataset_seed}};
    json outs = json::array();
    for (const auto& p : outputs_)
      outs.push_back({{"file", p.filename().string()}, {"bytes", fs::file_size(p)}, {"crc32", crc_hex(p)}});
    m["outputs"] = outs;
    m["warnings"] = warnings_;
    if (!extra_.is_null()) m["details"] = extra_;
    const fs::path p = path("manifest_" + command_ + ".json");
    std::ofstream(p) << m.dump(2) << '\n';
    log_ << "wrote " << p.string() << '\n';
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::ostream& log_;
  std::vector<fs::path> outputs_;
  std::vector<std::string> warnings_;
  json extra_;
};

void require_finite(const Array2& a, const std::string& what) {
  if (!a.allFinite()) throw DivergenceError(what + " contains non-finite values");
}

void require_file(const fs::path& p, const std::string& key) {
  if (!fs::exists(p)) throw std::runtime_error("missing input file " + p.string() + " (" + key + ")");
}

void write_png(Run& run, const RunConfig& cfg, const std::string& name, const Array2& v) {
  double lo = cfg.png_lo, hi = cfg.png_hi;
  if (!(hi > lo)) {
    lo = v.minCoeff();
    hi = v.maxCoeff();
    if (!(hi > lo)) hi = lo + 1.0;
  }
  const fs::path p = run.path(name);
  export_png(p, v, lo, hi);
  run.wrote(p);
}

ImageGrid config_grid(const RunConfig& c) { return {c.image_size, c.image_size, 2.0 / c.image_size}; }

SinogramGeometry config_geometry(const RunConfig& c) {
  SinogramGeometry g = default_geometry(config_grid(c), c.num_views);
  if (c.detectors > 0) g.num_detectors = c.detectors;
  g.detector_offset = c.detector_offset;
  return g;
}

OracleDataset config_dataset(const RunConfig& c) {
  return make_oracle_dataset(c.image_size, config_geometry(c), c.references, c.ellipses, c.dataset_seed);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

void cmd_phantom(Run& run, const RunConfig& c) {
  Image img;
  if (c.phantom_kind == "shepp-logan") {
    img = shepp_logan(c.image_size);
  } else {
    Rng rng = make_stream(c.dataset_seed, 0);
    for (int k = 0; k <= c.truth; ++k) img = random_phantom(c.image_size, c.ellipses, rng);
  }
  require_finite(img.values, "phantom");
  save_image(run.path("phantom.osmm"), img, {{"source", c.phantom_kind}});
  run.wrote(run.path("phantom.osmm"));
  write_png(run, c, "phantom.png", img.values);
}

void cmd_project(Run& run, const RunConfig& c) {
  require_file(c.input_image, "inputs.image");
  const Image img = load_image(c.input_image);
  const Sinogram s = forward_project(img, config_geometry(c));
  require_finite(s.values, "sinogram");
  save_sinogram(run.path("sinogram.osmm"), s);
  run.wrote(run.path("sinogram.osmm"));
  write_png(run, c, "sinogram.png", s.values);
}

void cmd_subsample(Run& run, const RunConfig& c) {
  require_file(c.input_sinogram, "inputs.sinogram");
  const Sinogram s = load_sinogram(c.input_sinogram);
  const int m = s.geometry.num_views;
  if (m % c.views_kept != 0)
    throw ConfigError("config key 'subsample.views' (" + std::to_string(c.views_kept) +
                      ") must divide the sinogram's view count " + std::to_string(m));
  const MaskedSinogram y = subsample(s, ViewMask::keep_uniform(m, c.views_kept));
  save_masked_sinogram(run.path("measurement.osmm"), y);
  run.wrote(run.path("measurement.osmm"));
  write_png(run, c, "measurement.png", y.data.values);
  const auto counts = measured_per_subset(y.mask, SubsetIndexMap(m, c.subsets));
  run.extra()["measured_per_subset"] = counts;
  for (std::size_t n = 0; n < counts.size(); ++n)
    if (counts[n] == 0) run.warn("subset " + std::to_string(n + 1) + " of " + std::to_string(c.subsets) +
                                 " receives no measured views");
}

std::string checkpoint_name(int n) { return n == 0 ? "whole.osmm" : "subset_" + std::to_string(n) + ".osmm"; }

void cmd_train(Run& run, const RunConfig& c, std::ostream& log) {
  const OracleDataset data = config_dataset(c);
  const double sigma_max = c.sigma_max > 0 ? c.sigma_max : data.max_distance();
  const SigmaSchedule sched(c.sigma_min, sigma_max, c.steps);
  const SubsetIndexMap map(c.num_views, c.subsets);
  fs::create_directories(run.path("checkpoints"));

  std::vector<std::vector<double>> traces;
  for (int n = 0; n <= c.subsets; ++n) {
    std::vector<Array2> set;
    for (const auto& s : data.sinograms) set.push_back(n == 0 ? s : os_extract(s, map, n));
    TrainConfig tc = c.train;
    tc.seed = c.seed * 1000 + std::uint64_t(n);
    log << "training " << (n == 0 ? std::string("whole") : "subset " + std::to_string(n)) << " model on "
        << set.size() << " arrays of " << set[0].rows() << "x" << set[0].cols() << '\n';
    auto res = train_score(set, tc, sched);
    const fs::path p = run.path("checkpoints") / checkpoint_name(n);
    save_checkpoint(p, res.net, sched,
                    {{"subset", std::to_string(n)}, {"subsets", std::to_string(c.subsets)},
                     {"final_loss", format_exact(res.loss_trace.back())}});
    run.wrote(p);
    traces.push_back(std::move(res.loss_trace));
  }
  const fs::path csv = run.path("train_loss.csv");
  std::ofstream out(csv);
  out << "step,whole";
  for (int n = 1; n <= c.subsets; ++n) out << ",subset_" << n;
  out << '\n';
  out.precision(10);
  for (std::size_t i = 0; i < traces[0].size(); ++i) {
    out << i;
    for (const auto& t : traces) out << ',' << t[i];
    out << '\n';
  }
  out.close();
  run.wrote(csv);
}

void cmd_reconstruct(Run& run, const RunConfig& c) {
  require_file(c.input_measurement, "inputs.measurement");
  const MaskedSinogram y = load_masked_sinogram(c.input_measurement);
  const ImageGrid grid = config_grid(c);

  ReconConfig rc;
  rc.num_subsets = c.subsets;
  rc.seed = c.seed;
  rc.variant = c.variant;
  rc.schedule = SigmaSchedule(c.sigma_min, c.sigma_max > 0 ? c.sigma_max : c.sigma_min * 2, c.steps);

  ReconResult r;
  if (c.variant == Variant::FbpOnly) {
    r = reconstruct(y, ReconModels{}, rc, grid);
  } else if (c.score == "oracle") {
    const OracleDataset data = config_dataset(c);
    if (!(data.geometry == y.data.geometry))
      throw ConfigError("measurement geometry does not match the configured dataset geometry "
                        "(image.size, geometry.*)");
    if (c.sigma_max <= 0) rc.schedule = SigmaSchedule(c.sigma_min, data.max_distance(), c.steps);
    const OracleSet oracles(data.sinograms, SubsetIndexMap(y.data.geometry.num_views, c.subsets));
    r = reconstruct(y, oracles.models(), rc, grid);
  } else {
    std::vector<TinyScoreNet> nets;
    for (int n = 0; n <= c.subsets; ++n) {
      const fs::path p = c.checkpoint_dir / checkpoint_name(n);
      require_file(p, "recon.checkpoint_dir");
      const Checkpoint ck = load_checkpoint(p);
      if (n == 0 && c.sigma_max <= 0)
        rc.schedule = SigmaSchedule(ck.schedule.sigma_min, ck.schedule.sigma_max, c.steps);
      nets.push_back(restore_net(ck));
    }
    ReconModels m;
    m.whole = &nets[0];
    for (int n = 1; n <= c.subsets; ++n) m.subsets.push_back(&nets[std::size_t(n)]);
    r = reconstruct(y, m, rc, grid);
  }
  for (const auto& w : r.warnings) run.warn(w);
  require_finite(r.image.values, "reconstruction");
  require_finite(r.sinogram.values, "completed sinogram");

  save_image(run.path("recon.osmm"), r.image, {{"variant", to_string(c.variant)}});
  run.wrote(run.path("recon.osmm"));
  write_png(run, c, "recon.png", r.image.values);
  save_sinogram(run.path("completed_sinogram.osmm"), r.sinogram);
  run.wrote(run.path("completed_sinogram.osmm"));
  write_png(run, c, "completed_sinogram.png", r.sinogram.values);
  if (c.variant != Variant::FbpOnly) {
    const fs::path csv = run.path("diagnostics.csv");
    std::ofstream out(csv);
    write_diagnostics_csv(out, r);
    out.close();
    run.wrote(csv);
  }
  run.extra()["schedule"] = {{"sigma_min", rc.schedule.sigma_min},
                             {"sigma_max", rc.schedule.sigma_max},
                             {"steps", rc.schedule.steps}};
  run.extra()["measured_per_subset"] = r.measured_per_subset;
}

void cmd_metrics(Run& run, const RunConfig& c, std::ostream& log) {
  require_file(c.input_reference, "inputs.reference");
  require_file(c.input_test, "inputs.test");
  const Image ref = load_image(c.input_reference), test = load_image(c.input_test);
  const MetricReport m = compare(ref, test);
  if (!std::isfinite(m.ssim) || !std::isfinite(m.mse)) throw DivergenceError("metrics are non-finite");
  json j = {{"ssim", m.ssim},
            {"mse", m.mse},
            {"data_range", m.data_range}};
  // identical images: PSNR is unbounded
  j["psnr"] = std::isfinite(m.psnr) ? json(m.psnr) : json("inf");
  const fs::path p = run.path("metrics.json");
  std::ofstream(p) << j.dump(2) << '\n';
  run.wrote(p);
  log << "PSNR " << fmt(m.psnr) << " dB  SSIM " << fmt(m.ssim) << "  MSE " << fmt(m.mse) << '\n';
}

void cmd_ablate(Run& run, const RunConfig& c, std::ostream& log) {
  const OracleDataset data = config_dataset(c);
  SweepSpec spec;
  spec.views = c.sweep_views;
  spec.subsets = c.sweep_subsets;
  spec.truths = c.sweep_truths;
  spec.seeds = c.sweep_seeds;
  spec.sigma_min = c.sigma_min;
  spec.sigma_max = c.sigma_max;
  spec.steps = c.steps;
  const auto rows = run_sweep(data, spec);
  for (const auto& r : rows) {
    log << to_string(r.variant) << " N=" << r.subsets << " views=" << r.views << ": PSNR " << fmt(r.psnr) << '\n';
    for (const auto& w : r.warnings)
      run.warn(to_string(r.variant) + " N=" + std::to_string(r.subsets) + " views=" + std::to_string(r.views) + ": " + w);
  }
  const fs::path p = run.path("ablation.csv");
  std::ofstream out(p);
  write_sweep_csv(out, rows);
  out.close();
  run.wrote(p);
}

struct CsvRow {
  std::string variant;
  int subsets = 0, views = 0;
  std::string psnr, ssim, mse;
};

std::vector<CsvRow> read_ablation(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (line != "variant,subsets,views,psnr,ssim,mse,runs") throw FormatError(p.string() + " is not an ablation CSV");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw FormatError(p.string() + ": malformed row '" + line + "'");
    rows.push_back({f[0], std::stoi(f[1]), std::stoi(f[2]), f[3], f[4], f[5]});
  }
  return rows;
}

// Rows are labels, column groups are view counts.
void write_pivot(const fs::path& p, const std::string& label, const std::vector<std::string>& keys,
                 const std::vector<int>& views, const std::map<std::pair<std::string, int>, CsvRow>& cells) {
  std::ofstream out(p);
  out << label;
  for (int v : views) out << ",psnr_" << v << ",ssim_" << v << ",mse_" << v;
  out << '\n';
  for (const auto& k : keys) {
    out << k;
    for (int v : views) {
      const auto it = cells.find({k, v});
      if (it == cells.end())
        out << ",,,";
      else
        out << ',' << it->second.psnr << ',' << it->second.ssim << ',' << it->second.mse;
    }
    out << '\n';
  }
}

void cmd_tables(Run& run, const RunConfig& c) {
  require_file(c.input_ablation, "inputs.ablation");
  const auto rows = read_ablation(c.input_ablation);
  std::vector<int> views;
  std::vector<std::string> variants, subset_keys;
  std::map<std::pair<std::string, int>, CsvRow> by_variant, by_subsets;
  auto add = [](auto& list, const auto& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  for (const auto& r : rows) {
    add(views, r.views);
    if (r.subsets == c.subsets) {
      add(variants, r.variant);
      by_variant[{r.variant, r.views}] = r;
    }
    if (r.variant == to_string(Variant::Osmm)) {
      add(subset_keys, std::to_string(r.subsets));
      by_subsets[{std::to_string(r.subsets), r.views}] = r;
    }
  }
  if (variants.empty())
    throw ConfigError("ablation CSV has no rows for recon.subsets=" + std::to_string(c.subsets));
  write_pivot(run.path("table_variants.csv"), "variant", variants, views, by_variant);
  run.wrote(run.path("table_variants.csv"));
  write_pivot(run.path("table_subsets.csv"), "subsets", subset_keys, views, by_subsets);
  run.wrote(run.path("table_subsets.csv"));
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"phantom", "project", "subsample", "train",
                                              "reconstruct", "metrics", "ablate", "tables"};
  return names;
}

void run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  Run run(command, cfg, log);
  if (command == "phantom")
    cmd_phantom(run, cfg);
  else if (command == "project")
    cmd_project(run, cfg);
  else if (command == "subsample")
    cmd_subsample(run, cfg);
  else if (command == "train")
    cmd_train(run, cfg, log);
  else if (command == "reconstruct")
    cmd_reconstruct(run, cfg);
  else if (command == "metrics")
    cmd_metrics(run, cfg, log);
  else if (command == "ablate")
    cmd_ablate(run, cfg, log);
  else if (command == "tables")
    cmd_tables(run, cfg);
  else
    throw ConfigError("unknown command '" + command + "'");
  run.finish();
}

}  // namespace osmm::cli
