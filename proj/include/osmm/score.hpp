#pragma once

#include <vector>

#include "osmm/types.hpp"

namespace osmm {

/// s(x, sigma) ~ grad_x log p_sigma(x). Implementations must be reentrant.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual Array2 evaluate(const Array2& x, double sigma) const = 0;
};

/// Exact score of the sigma-smoothed empirical distribution
/// (1/K) sum_k N(x; r_k, sigma^2 I).
class GmmOracle final : public ScoreModel {
 public:
  explicit GmmOracle(std::vector<Array2> references);

  Array2 evaluate(const Array2& x, double sigma) const override;
  /// log of the smoothed density, normalising constant included.
  double log_density(const Array2& x, double sigma) const;
  /// Posterior component weights at (x, sigma).
  Eigen::VectorXd weights(const Array2& x, double sigma) const;

  const std::vector<Array2>& references() const { return refs_; }

 private:
  std::vector<Array2> refs_;
};

/// Score of N(mean, std^2 I) smoothed by sigma: -(x - mean) / (std^2 + sigma^2).
class GaussianOracle final : public ScoreModel {
 public:
  GaussianOracle(Array2 mean, double std_dev);
  Array2 evaluate(const Array2& x, double sigma) const override;

 private:
  Array2 mean_;
  double var_;
};

/// The zero field; handy for isolating the data-consistency path.
class ZeroScore final : public ScoreModel {
 public:
  Array2 evaluate(const Array2& x, double) const override { return Array2::Zero(x.rows(), x.cols()); }
};

inline Array2 oracle_score(const GmmOracle& o, const Array2& x, double sigma) { return o.evaluate(x, sigma); }

}  // namespace osmm
