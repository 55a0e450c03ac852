#include "osmm/dsm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace osmm {

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train.steps must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
  if (!(final_lr_fraction > 0) || final_lr_fraction > 1) throw ConfigError("train.final_lr_fraction must be in (0, 1]");
  if (channels < 1 || embed < 1) throw ConfigError("network widths must be positive");
}

double loss_weight(LossWeighting weighting, double sigma) {
  return weighting == LossWeighting::SigmaSquared ? sigma * sigma : 1.0;
}

double dsm_sample_loss(const ScoreModel& model, const Array2& x0, const Array2& z, int t, const SigmaSchedule& s,
                       LossWeighting weighting) {
  const double sigma = s.sigma(t);
  if (!(sigma > 0)) throw std::invalid_argument("DSM needs t >= 1");
  const Array2 score = model.evaluate(x0 + sigma * z, sigma);
  return loss_weight(weighting, sigma) * (score + z / sigma).squaredNorm();
}

namespace {

struct Draw {
  int t;
  Array2 z;
};

Draw draw(const Array2& x0, const SigmaSchedule& s, Rng& rng) {
  std::uniform_int_distribution<int> level(1, s.steps - 1);
  const int t = level(rng);
  return {t, standard_normal(x0.rows(), x0.cols(), rng)};
}

}  // namespace

DsmResult dsm_loss(const TinyScoreNet& model, const std::vector<Array2>& batch, const SigmaSchedule& s, Rng& rng,
                   LossWeighting weighting) {
  if (batch.empty()) throw std::invalid_argument("DSM loss needs a non-empty batch");
  DsmResult r;
  r.gradient = Eigen::VectorXd::Zero(model.parameters().size());
  const double inv_b = 1.0 / double(batch.size());
  for (const auto& x0 : batch) {
    const auto [t, z] = draw(x0, s, rng);
    const double sigma = s.sigma(t);
    const double lam = loss_weight(weighting, sigma);
    const Array2 target = -z / sigma;
    double sample = 0.0;
    model.evaluate_with_gradient(
        x0 + sigma * z, sigma,
        [&](const Array2& score) {
          const Array2 diff = score - target;
          sample = lam * diff.squaredNorm();
          return Array2((2.0 * lam * inv_b) * diff);
        },
        r.gradient);
    r.per_sample.push_back(sample);
    r.loss += sample * inv_b;
  }
  return r;
}

DsmResult dsm_loss(const ScoreModel& model, const std::vector<Array2>& batch, const SigmaSchedule& s, Rng& rng,
                   LossWeighting weighting) {
  if (batch.empty()) throw std::invalid_argument("DSM loss needs a non-empty batch");
  DsmResult r;
  for (const auto& x0 : batch) {
    const auto [t, z] = draw(x0, s, rng);
    const double sample = dsm_sample_loss(model, x0, z, t, s, weighting);
    r.per_sample.push_back(sample);
    r.loss += sample / double(batch.size());
  }
  return r;
}

double data_scale(const std::vector<Array2>& dataset) {
  if (dataset.empty()) return 1.0;
  Array2 mean = Array2::Zero(dataset.front().rows(), dataset.front().cols());
  for (const auto& a : dataset) mean += a;
  mean /= double(dataset.size());
  double dev = 0.0, energy = 0.0, count = 0.0;
  for (const auto& a : dataset) {
    dev += (a - mean).squaredNorm();
    energy += a.squaredNorm();
    count += double(a.size());
  }
  const double floor = std::max(1e-3 * std::sqrt(energy / count), 1e-12);
  return std::max(std::sqrt(dev / count), floor);
}

TrainResult train_score(const std::vector<Array2>& dataset, const TrainConfig& cfg, const SigmaSchedule& s) {
  cfg.validate();
  s.validate();
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  const auto rows = dataset.front().rows(), cols = dataset.front().cols();
  Array2 mean = Array2::Zero(rows, cols);
  for (const auto& a : dataset) {
    if (a.rows() != rows || a.cols() != cols) throw ShapeError("training arrays differ in shape");
    mean += a;
  }
  mean /= double(dataset.size());

  Rng init_rng = make_stream(cfg.seed, 1);
  Rng batch_rng = make_stream(cfg.seed, 2);
  Rng noise_rng = make_stream(cfg.seed, 3);

  const auto arch = NetArchitecture::for_shape(int(rows), int(cols), cfg.channels, cfg.embed, data_scale(dataset));
  TrainResult result{TinyScoreNet(arch), {}};
  TinyScoreNet& net = result.net;
  net.initialize(init_rng, cfg.template_init == TemplateInit::DatasetMean ? &mean : nullptr);

  const Eigen::Index n = net.parameters().size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::vector<Array2> batch(std::size_t(cfg.batch_size));
  result.loss_trace.reserve(std::size_t(cfg.steps));
  for (int step = 1; step <= cfg.steps; ++step) {
    for (auto& b : batch) b = dataset[pick(batch_rng)];
    const DsmResult r = dsm_loss(net, batch, s, noise_rng, cfg.weighting);
    if (!std::isfinite(r.loss) || !r.gradient.allFinite())
      throw DivergenceError("training loss became non-finite at step " + std::to_string(step));
    result.loss_trace.push_back(r.loss);
    m = cfg.beta1 * m + (1 - cfg.beta1) * r.gradient;
    v = cfg.beta2 * v + (1 - cfg.beta2) * r.gradient.cwiseAbs2();
    const double c1 = 1 - std::pow(cfg.beta1, step), c2 = 1 - std::pow(cfg.beta2, step);
    const double progress = cfg.steps > 1 ? double(step - 1) / double(cfg.steps - 1) : 0.0;
    const double lr = cfg.learning_rate * (cfg.final_lr_fraction + (1 - cfg.final_lr_fraction) * 0.5 *
                                                                        (1 + std::cos(std::numbers::pi * progress)));
    net.parameters().array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
  }
  return result;
}

}  // namespace osmm
