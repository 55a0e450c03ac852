#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "osmm/metrics.hpp"
#include "osmm/recon.hpp"

namespace osmm {

/// K random phantoms and their full-view sinograms on one geometry.
struct OracleDataset {
  ImageGrid grid;
  SinogramGeometry geometry;
  std::vector<Image> phantoms;
  std::vector<Array2> sinograms;

  /// Largest pairwise sinogram distance, the default sigma_max.
  double max_distance() const { return max_pairwise_distance(sinograms); }
};

/// Phantoms are drawn in order from make_stream(seed, 0). detectors <= 0 picks
/// the default count for the grid.
OracleDataset make_oracle_dataset(int image_size, int num_views, int references, int ellipses, std::uint64_t seed,
                                  int detectors = 0);
OracleDataset make_oracle_dataset(int image_size, const SinogramGeometry& geometry, int references, int ellipses,
                                  std::uint64_t seed);

struct TrialResult {
  MetricReport metrics;
  ReconResult recon;
};

/// Reconstructs phantom `truth` from its `mask`-subsampled sinogram with oracle
/// scores over every dataset sinogram (the truth included).
TrialResult run_oracle_trial(const OracleDataset& data, int truth, const ViewMask& mask, const ReconConfig& cfg);

struct SweepSpec {
  std::vector<Variant> variants{Variant::Osmm, Variant::MsdmOnly, Variant::OwdmOnly, Variant::FbpOnly};
  std::vector<int> views{60};
  std::vector<int> subsets{2};
  std::vector<int> truths;  // empty: every phantom
  std::vector<std::uint64_t> seeds{0};
  double sigma_min = 0.01;
  double sigma_max = 0.0;  // <= 0: dataset max distance
  int steps = 200;
};

/// Mean metrics over truths x seeds for one (variant, N, views) cell.
struct SweepRow {
  Variant variant = Variant::Osmm;
  int subsets = 0;
  int views = 0;
  double psnr = 0, ssim = 0, mse = 0;
  int runs = 0;
  std::vector<double> psnr_runs;
  std::vector<std::string> warnings;
};

std::vector<SweepRow> run_sweep(const OracleDataset& data, const SweepSpec& spec);

/// Columns variant,subsets,views,psnr,ssim,mse,runs.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace osmm
