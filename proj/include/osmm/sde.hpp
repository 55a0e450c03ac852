#pragma once

#include <functional>
#include <optional>

#include "osmm/rng.hpp"
#include "osmm/types.hpp"

namespace osmm {

class ScoreModel;

/// Geometric VE noise levels sigma_0..sigma_{T-1}:
///   sigma_t = sigma_min * (sigma_max / sigma_min)^(t / (T-1)) for t >= 1, sigma_0 = 0.
struct SigmaSchedule {
  double sigma_min = 0.01;
  double sigma_max = 50.0;
  int steps = 500;  // T

  SigmaSchedule() = default;
  SigmaSchedule(double lo, double hi, int t) : sigma_min(lo), sigma_max(hi), steps(t) { validate(); }

  void validate() const;
  /// Throws std::out_of_range unless 0 <= t <= T-1.
  double sigma(int t) const;
};

inline double sigma_at(const SigmaSchedule& s, int t) { return s.sigma(t); }

/// x0 + sigma_t z.
Array2 perturb(const Array2& x0, int t, const SigmaSchedule& s, Rng& rng);

/// One reverse-SDE predictor update from level sigma_next down to sigma_now:
///   x + (sigma_next^2 - sigma_now^2) score + sqrt(sigma_next^2 - sigma_now^2) z.
/// `z_override` replaces the drawn noise (nothing is drawn from rng then).
Array2 predictor_step(const Array2& x, const Array2& score, double sigma_now, double sigma_next, Rng& rng,
                      const std::optional<Array2>& z_override = std::nullopt);

/// Called after each predictor step with the new sample and its level t.
using StepHook = std::function<void(Array2& x, int t)>;

/// Reverse-time sampling: x ~ N(0, sigma_max^2 I) at level T-1, then one
/// predictor step per level t = T-2 .. 0, each scored at sigma_{t+1}.
Array2 reverse_sample(const ScoreModel& score, Eigen::Index rows, Eigen::Index cols, const SigmaSchedule& s, Rng& rng,
                      const StepHook& hook = {});

/// Largest pairwise Euclidean distance in a dataset; the usual sigma_max pick.
double max_pairwise_distance(const std::vector<Array2>& data);

}  // namespace osmm
