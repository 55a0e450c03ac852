#include "osmm/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "osmm/score.hpp"

namespace osmm {

void SigmaSchedule::validate() const {
  if (!(sigma_min > 0)) throw ConfigError("sigma_min must be positive");
  if (!(sigma_max > sigma_min)) throw ConfigError("sigma_max must exceed sigma_min");
  if (steps < 2) throw ConfigError("schedule needs at least two levels");
}

double SigmaSchedule::sigma(int t) const {
  if (t < 0 || t > steps - 1)
    throw std::out_of_range("schedule index " + std::to_string(t) + " outside [0, " + std::to_string(steps - 1) + "]");
  if (t == 0) return 0.0;
  if (t == steps - 1) return sigma_max;
  return sigma_min * std::pow(sigma_max / sigma_min, double(t) / double(steps - 1));
}

Array2 perturb(const Array2& x0, int t, const SigmaSchedule& s, Rng& rng) {
  const double sigma = s.sigma(t);
  if (sigma == 0.0) return x0;
  return x0 + sigma * standard_normal(x0.rows(), x0.cols(), rng);
}

Array2 predictor_step(const Array2& x, const Array2& score, double sigma_now, double sigma_next, Rng& rng,
                      const std::optional<Array2>& z_override) {
  if (!(sigma_next > sigma_now) || sigma_now < 0)
    throw std::invalid_argument("predictor step needs sigma_next > sigma_now >= 0");
  if (score.rows() != x.rows() || score.cols() != x.cols()) throw ShapeError("score shape differs from sample");
  const double var = sigma_next * sigma_next - sigma_now * sigma_now;
  if (z_override) {
    if (z_override->rows() != x.rows() || z_override->cols() != x.cols()) throw ShapeError("noise override shape");
    return x + var * score + std::sqrt(var) * *z_override;
  }
  return x + var * score + std::sqrt(var) * standard_normal(x.rows(), x.cols(), rng);
}

Array2 reverse_sample(const ScoreModel& score, Eigen::Index rows, Eigen::Index cols, const SigmaSchedule& s, Rng& rng,
                      const StepHook& hook) {
  s.validate();
  Array2 x = s.sigma_max * standard_normal(rows, cols, rng);
  for (int t = s.steps - 2; t >= 0; --t) {
    const double hi = s.sigma(t + 1);
    x = predictor_step(x, score.evaluate(x, hi), s.sigma(t), hi, rng);
    if (hook) hook(x, t);
  }
  return x;
}

double max_pairwise_distance(const std::vector<Array2>& data) {
  double best = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = i + 1; j < data.size(); ++j) best = std::max(best, (data[i] - data[j]).norm());
  return best;
}

}  // namespace osmm
