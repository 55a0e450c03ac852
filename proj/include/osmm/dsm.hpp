#pragma once

#include <cstdint>
#include <vector>

#include "osmm/sde.hpp"
#include "osmm/tiny_net.hpp"

namespace osmm {

/// lambda(t) in the denoising score-matching objective.
enum class LossWeighting {
  SigmaSquared,  // lambda = sigma_t^2: loss = |sigma_t s + z|^2
  Unit,          // lambda = 1
};

/// Starting point of the network's template map.
enum class TemplateInit {
  DatasetMean,
  Zero,
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 8;
  double learning_rate = 1e-2;
  double final_lr_fraction = 0.01;  // cosine decay from learning_rate to this fraction of it
  LossWeighting weighting = LossWeighting::SigmaSquared;
  std::uint64_t seed = 0;
  int channels = 8;
  int embed = 16;
  TemplateInit template_init = TemplateInit::DatasetMean;
  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

double loss_weight(LossWeighting weighting, double sigma);

/// lambda(t) |s(x0 + sigma_t z, sigma_t) + z / sigma_t|^2 for one fixed draw.
double dsm_sample_loss(const ScoreModel& model, const Array2& x0, const Array2& z, int t, const SigmaSchedule& s,
                       LossWeighting weighting = LossWeighting::SigmaSquared);

struct DsmResult {
  double loss = 0.0;                // batch mean
  std::vector<double> per_sample;
  Eigen::VectorXd gradient;         // d loss / d theta (empty for non-network models)
};

/// Monte-Carlo DSM objective over a batch. Each sample draws t uniformly from
/// {1..T-1}, then z ~ N(0, I), in batch order.
DsmResult dsm_loss(const TinyScoreNet& model, const std::vector<Array2>& batch, const SigmaSchedule& s, Rng& rng,
                   LossWeighting weighting = LossWeighting::SigmaSquared);

/// Same draws and value as dsm_loss, for any score model; no gradient.
DsmResult dsm_loss(const ScoreModel& model, const std::vector<Array2>& batch, const SigmaSchedule& s, Rng& rng,
                   LossWeighting weighting = LossWeighting::SigmaSquared);

struct TrainResult {
  TinyScoreNet net;
  std::vector<double> loss_trace;
};

/// Adam on the DSM objective. Throws DivergenceError on a non-finite loss.
TrainResult train_score(const std::vector<Array2>& dataset, const TrainConfig& cfg, const SigmaSchedule& s);

/// Root-mean-square deviation of the dataset from its mean (the network's
/// sigma_data), floored at 1e-3 of the dataset's root-mean-square value.
double data_scale(const std::vector<Array2>& dataset);

}  // namespace osmm
