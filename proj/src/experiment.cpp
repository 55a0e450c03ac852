#include "osmm/experiment.hpp"

#include <cmath>
#include <ostream>

#include "osmm/phantom.hpp"
#include "osmm/tomo.hpp"

namespace osmm {

OracleDataset make_oracle_dataset(int image_size, int num_views, int references, int ellipses, std::uint64_t seed,
                                  int detectors) {
  const ImageGrid grid{image_size, image_size, 2.0 / image_size};
  SinogramGeometry geom = default_geometry(grid, num_views);
  if (detectors > 0) geom.num_detectors = detectors;
  return make_oracle_dataset(image_size, geom, references, ellipses, seed);
}

OracleDataset make_oracle_dataset(int image_size, const SinogramGeometry& geometry, int references, int ellipses,
                                  std::uint64_t seed) {
  if (references < 1) throw ConfigError("oracle dataset needs at least one reference");
  OracleDataset d;
  d.grid = ImageGrid{image_size, image_size, 2.0 / image_size};
  d.geometry = geometry;
  Rng rng = make_stream(seed, 0);
  for (int k = 0; k < references; ++k) {
    d.phantoms.push_back(random_phantom(image_size, ellipses, rng));
    d.sinograms.push_back(forward_project(d.phantoms.back(), d.geometry).values);
  }
  return d;
}

TrialResult run_oracle_trial(const OracleDataset& data, int truth, const ViewMask& mask, const ReconConfig& cfg) {
  if (truth < 0 || truth >= int(data.phantoms.size())) throw ConfigError("truth index out of range");
  const MaskedSinogram y = subsample(Sinogram(data.geometry, data.sinograms[std::size_t(truth)]), mask);
  TrialResult r;
  if (cfg.variant == Variant::FbpOnly) {
    r.recon = reconstruct(y, ReconModels{}, cfg, data.grid);
  } else {
    const OracleSet oracles(data.sinograms, SubsetIndexMap(data.geometry.num_views, cfg.num_subsets));
    r.recon = reconstruct(y, oracles.models(), cfg, data.grid);
  }
  r.metrics = compare(data.phantoms[std::size_t(truth)], r.recon.image);
  return r;
}

std::vector<SweepRow> run_sweep(const OracleDataset& data, const SweepSpec& spec) {
  std::vector<int> truths = spec.truths;
  if (truths.empty())
    for (int k = 0; k < int(data.phantoms.size()); ++k) truths.push_back(k);
  const double sigma_max = spec.sigma_max > 0 ? spec.sigma_max : data.max_distance();

  std::vector<SweepRow> rows;
  for (int views : spec.views) {
    const ViewMask mask = ViewMask::keep_uniform(data.geometry.num_views, views);
    for (int n : spec.subsets)
      for (Variant v : spec.variants) {
        SweepRow row;
        row.variant = v;
        row.subsets = n;
        row.views = views;
        for (int truth : truths)
          for (auto seed : spec.seeds) {
            ReconConfig cfg;
            cfg.num_subsets = n;
            cfg.schedule = SigmaSchedule(spec.sigma_min, sigma_max, spec.steps);
            cfg.seed = seed;
            cfg.variant = v;
            const auto t = run_oracle_trial(data, truth, mask, cfg);
            if (!std::isfinite(t.metrics.psnr) && t.metrics.mse != 0)
              throw DivergenceError("non-finite PSNR for " + to_string(v));
            row.psnr += t.metrics.psnr;
            row.ssim += t.metrics.ssim;
            row.mse += t.metrics.mse;
            row.psnr_runs.push_back(t.metrics.psnr);
            if (row.warnings.empty()) row.warnings = t.recon.warnings;
            ++row.runs;
          }
        row.psnr /= row.runs;
        row.ssim /= row.runs;
        row.mse /= row.runs;
        rows.push_back(std::move(row));
      }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "variant,subsets,views,psnr,ssim,mse,runs\n";
  out.precision(10);
  for (const auto& r : rows)
    out << to_string(r.variant) << ',' << r.subsets << ',' << r.views << ',' << r.psnr << ',' << r.ssim << ','
        << r.mse << ',' << r.runs << '\n';
}

}  // namespace osmm
