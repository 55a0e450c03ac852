#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "osmm/rng.hpp"
#include "osmm/score.hpp"
#include "osmm/sde.hpp"
#include "osmm/subsets.hpp"
#include "osmm/types.hpp"

namespace osmm {

enum class Variant { Osmm, MsdmOnly, OwdmOnly, FbpOnly };

/// Only hard row replacement exists; soft weighting would slot in here.
enum class DcMode { HardReplace };

std::string to_string(Variant v);
/// Accepts "OSMM", "MSDM-only", "OWDM-only", "FBP-only" (case-insensitive).
Variant parse_variant(const std::string& s);

struct ReconConfig {
  int num_subsets = 2;  // N
  SigmaSchedule schedule;
  DcMode dc_mode = DcMode::HardReplace;
  std::uint64_t seed = 0;
  Variant variant = Variant::Osmm;

  /// ConfigError unless N >= 1 divides num_views and the schedule is valid.
  void validate(int num_views) const;
};

/// Non-owning score models: one for the whole sinogram, one per subset
/// (subset n at index n-1, each seeing (M/N) x D arrays).
struct ReconModels {
  const ScoreModel* whole = nullptr;
  std::vector<const ScoreModel*> subsets;
};

/// Closed-form scores over a set of reference sinograms, whole and per subset.
struct OracleSet {
  GmmOracle whole;
  std::vector<GmmOracle> subsets;

  OracleSet(const std::vector<Array2>& references, const SubsetIndexMap& map);
  ReconModels models() const;
};

struct StepDiagnostics {
  int t = 0;
  double r1 = 0.0;        // sum_n |x_n^t - OS(x^{t+1}, n)|^2
  double r2 = 0.0;        // |x^t - OS^-(x_1^t..x_N^t)|^2 after the whole step
  double fidelity = 0.0;  // |P(mask) x^t - y|^2
};

struct ReconState {
  std::vector<Array2> subsets;  // x_n at level t
  Array2 merged;                // whole sinogram at level t
  int t = 0;
  std::vector<StepDiagnostics> diagnostics;
};

/// Rows of x where mask is true replaced by the same rows of y.
Array2 data_consistency(const Array2& x, const Array2& y, const ViewMask& mask);

/// Measurement, subset bookkeeping and RNG streams shared by the steps of one run.
class ReconProblem {
 public:
  ReconProblem(const MaskedSinogram& y, const ReconConfig& cfg);

  const MaskedSinogram& measurement() const { return y_; }
  const ReconConfig& config() const { return cfg_; }
  const SubsetIndexMap& map() const { return map_; }
  const ViewMask& subset_mask(int n) const { return subset_masks_[std::size_t(n - 1)]; }
  const Array2& subset_measurement(int n) const { return subset_y_[std::size_t(n - 1)]; }
  const std::vector<int>& measured_per_subset() const { return counts_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  Rng& subset_stream(int n) { return subset_rng_[std::size_t(n - 1)]; }
  Rng& whole_stream() { return whole_rng_; }

  /// x^{T-1} ~ N(0, sigma_max^2 I) drawn once for the whole sinogram and split,
  /// so every variant starts from the same sample.
  ReconState initial_state();

  /// |P(mask) x - y|^2 over the measured rows.
  double fidelity(const Array2& x) const;

 private:
  MaskedSinogram y_;
  ReconConfig cfg_;
  SubsetIndexMap map_;
  std::vector<ViewMask> subset_masks_;
  std::vector<Array2> subset_y_;
  std::vector<int> counts_;
  std::vector<std::string> warnings_;
  Rng init_rng_;
  std::vector<Rng> subset_rng_;
  Rng whole_rng_;
};

/// Subsets from level t+1 to t: predictor step with model n scored at
/// sigma_{t+1}, then DC against subset n's measured views. Records R1.
void msdm_step(ReconProblem& p, ReconState& state, const ReconModels& models, int t);

/// Merge, one whole-sinogram predictor step over the same (sigma_t, sigma_{t+1})
/// pair, full DC, then re-split. Records R2 and fidelity.
void owdm_step(ReconProblem& p, ReconState& state, const ScoreModel& whole, int t);

struct ReconResult {
  Image image;
  Sinogram sinogram;  // final completed sinogram (the measurement itself for FBP-only)
  std::vector<StepDiagnostics> diagnostics;
  std::vector<int> measured_per_subset;
  std::vector<std::string> warnings;
};

ReconResult osmm_reconstruct(const MaskedSinogram& y, const ReconModels& models, const ReconConfig& cfg,
                             const ImageGrid& grid);

/// MSDM-only: subset loops merged once at the end. OWDM-only: whole loop only.
ReconResult ablation_reconstruct(const MaskedSinogram& y, const ReconModels& models, const ReconConfig& cfg,
                                 const ImageGrid& grid);

/// Dispatches on cfg.variant; FBP-only is the masked FBP of y.
ReconResult reconstruct(const MaskedSinogram& y, const ReconModels& models, const ReconConfig& cfg,
                        const ImageGrid& grid);

/// Columns t,R1,R2,fidelity,per_subset_measured (counts joined with ';').
void write_diagnostics_csv(std::ostream& out, const ReconResult& r);

}  // namespace osmm
