#include <doctest.h>

#include <cmath>
#include <random>

#include "osmm/dsm.hpp"
#include "osmm/score.hpp"

using namespace osmm;

namespace {

// Returns a fixed field regardless of input.
class FixedScore final : public ScoreModel {
 public:
  explicit FixedScore(Array2 v) : v_(std::move(v)) {}
  Array2 evaluate(const Array2&, double) const override { return v_; }

 private:
  Array2 v_;
};

double relative_l2(const ScoreModel& model, const ScoreModel& reference, const Array2& centre, double sigma,
                   int draws, std::uint64_t seed) {
  Rng rng = make_stream(seed, 17);
  double num = 0, den = 0;
  for (int i = 0; i < draws; ++i) {
    const Array2 x = centre + sigma * standard_normal(centre.rows(), centre.cols(), rng);
    const Array2 a = model.evaluate(x, sigma), b = reference.evaluate(x, sigma);
    num += (a - b).squaredNorm();
    den += b.squaredNorm();
  }
  return std::sqrt(num / den);
}

Array2 single_target() {
  Rng rng = make_stream(7, 0);
  Array2 r = 0.5 * standard_normal(8, 8, rng);
  r.array() += 1.0;
  return r;
}

}  // namespace

TEST_CASE("oracle: K=1 is the Gaussian kernel score, exactly") {
  Rng rng = make_stream(1);
  const Array2 r = standard_normal(5, 4, rng), x = standard_normal(5, 4, rng);
  const GmmOracle o({r});
  for (double sigma : {0.1, 0.7, 3.0}) {
    const Array2 expected = -(x - r) / (sigma * sigma);
    CHECK((o.evaluate(x, sigma).array() == expected.array()).all());
    CHECK((oracle_score(o, x, sigma).array() == expected.array()).all());
  }
}

TEST_CASE("oracle: symmetric point between two references") {
  const GmmOracle o({Array2::Constant(1, 1, -1.0), Array2::Constant(1, 1, 1.0)});
  CHECK(o.evaluate(Array2::Zero(1, 1), 0.5)(0, 0) == 0.0);
  const auto w = o.weights(Array2::Zero(1, 1), 0.5);
  CHECK(w[0] == w[1]);
}

TEST_CASE("oracle: matches finite differences of the log-density") {
  Rng rng = make_stream(2);
  std::vector<Array2> refs;
  for (int k = 0; k < 3; ++k) refs.push_back(standard_normal(3, 3, rng));
  const GmmOracle o(refs);
  const Array2 x = 0.8 * standard_normal(3, 3, rng);
  const double sigma = 0.7, eps = 1e-5;
  const Array2 s = o.evaluate(x, sigma);
  Array2 fd(3, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Array2 p = x, m = x;
    p.data()[i] += eps;
    m.data()[i] -= eps;
    fd.data()[i] = (o.log_density(p, sigma) - o.log_density(m, sigma)) / (2 * eps);
  }
  CHECK((s - fd).norm() <= 1e-5 * s.norm());
}

TEST_CASE("oracle: stable for far-away points and rejects sigma 0") {
  const GmmOracle o({Array2::Constant(2, 2, 0.0), Array2::Constant(2, 2, 1.0)});
  const Array2 far = Array2::Constant(2, 2, 1e4);
  CHECK(o.evaluate(far, 0.01).allFinite());
  CHECK(std::isfinite(o.log_density(far, 0.01)));
  CHECK_THROWS_AS(o.evaluate(far, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(o.evaluate(Array2::Zero(3, 2), 1.0), ShapeError);
  CHECK_THROWS_AS(GmmOracle({Array2::Zero(2, 2), Array2::Zero(2, 3)}), ShapeError);
}

TEST_CASE("gaussian oracle: smoothed score") {
  const Array2 mu = Array2::Constant(2, 2, 3.0);
  const GaussianOracle g(mu, 0.5);
  const Array2 x = Array2::Constant(2, 2, 4.0);
  CHECK(std::abs(g.evaluate(x, 1.0)(1, 1) + 1.0 / 1.25) <= 1e-15);
}

TEST_CASE("dsm: exact kernel target gives zero loss") {
  Rng rng = make_stream(3);
  const SigmaSchedule s(0.01, 5.0, 20);
  const Array2 x0 = standard_normal(4, 4, rng), z = standard_normal(4, 4, rng);
  const int t = 7;
  const FixedScore exact(-z / s.sigma(t));
  CHECK(dsm_sample_loss(exact, x0, z, t, s) <= 1e-24);
}

TEST_CASE("dsm: zero model gives |z|^2 under sigma^2 weighting") {
  Rng rng = make_stream(4);
  const SigmaSchedule s(0.01, 5.0, 20);
  const Array2 x0 = standard_normal(4, 4, rng), z = standard_normal(4, 4, rng);
  const ZeroScore zero;
  for (int t : {1, 9, 19}) {
    CHECK(std::abs(dsm_sample_loss(zero, x0, z, t, s) - z.squaredNorm()) <= 1e-12 * z.squaredNorm());
    const double unit = dsm_sample_loss(zero, x0, z, t, s, LossWeighting::Unit);
    CHECK(std::abs(unit - z.squaredNorm() / (s.sigma(t) * s.sigma(t))) <= 1e-10 * unit);
  }
  CHECK_THROWS_AS(dsm_sample_loss(zero, x0, z, 0, s), std::invalid_argument);
}

TEST_CASE("dsm: batch loss is the mean of non-negative samples") {
  Rng rng = make_stream(5);
  const SigmaSchedule s(0.01, 5.0, 20);
  std::vector<Array2> batch = {standard_normal(3, 3, rng), standard_normal(3, 3, rng), standard_normal(3, 3, rng)};
  const GmmOracle o({batch[0]});
  Rng a = make_stream(6);
  const auto r = dsm_loss(o, batch, s, a);
  REQUIRE(r.per_sample.size() == 3);
  double mean = 0;
  for (double v : r.per_sample) {
    CHECK(v >= 0);
    mean += v / 3;
  }
  CHECK(std::abs(r.loss - mean) <= 1e-12 * mean);
  Rng b = make_stream(6);
  CHECK_THROWS_AS(dsm_loss(o, std::vector<Array2>{}, s, b), std::invalid_argument);
}

TEST_CASE("net: architecture bookkeeping") {
  const auto arch = NetArchitecture::for_shape(8, 8, 8, 16, 1.0);
  CHECK(arch.template_stride == 1);
  CHECK(arch.parameter_count() == 6332);
  TinyScoreNet net(arch);
  CHECK(net.parameters().size() == arch.parameter_count());
  // large grids coarsen the template so it stays bounded
  const auto big = NetArchitecture::for_shape(720, 363);
  CHECK(big.template_rows() * big.template_cols() <= 65536);
  CHECK(big.parameter_count() <= 100000);
  const auto sub = NetArchitecture::for_shape(360, 363);
  CHECK(sub.parameter_count() <= 100000);
}

TEST_CASE("net: deterministic, shape preserving, rejects foreign shapes") {
  for (auto [rows, cols] : {std::pair{8, 8}, std::pair{7, 5}, std::pair{12, 9}}) {
    TinyScoreNet net(NetArchitecture::for_shape(rows, cols, 4, 8, 0.7));
    Rng rng = make_stream(8);
    net.initialize(rng);
    const Array2 x = standard_normal(rows, cols, rng);
    const Array2 a = net.evaluate(x, 0.3), b = net_score(net, x, 0.3);
    CHECK(a.rows() == rows);
    CHECK(a.cols() == cols);
    CHECK((a.array() == b.array()).all());
    CHECK(a.allFinite());
    CHECK_THROWS_AS(net.evaluate(standard_normal(rows + 1, cols, rng), 0.3), ShapeError);
  }
}

TEST_CASE("dsm: network gradient matches central differences") {
  Rng rng = make_stream(9);
  const Array2 r = standard_normal(8, 7, rng);
  auto arch = NetArchitecture::for_shape(8, 7, 4, 6, 1.3);
  arch.template_stride = 2;
  TinyScoreNet net(arch);
  Rng init = make_stream(1, 1);
  net.initialize(init, &r);
  // move off the zero-gain start so every parameter group is live
  net.parameters() += 0.1 * standard_normal(net.parameters().size(), 1, rng).col(0);
  const SigmaSchedule s(0.05, 5.0, 20);
  const std::vector<Array2> batch{r, 0.5 * r};

  Rng draws = make_stream(3, 3);
  const auto res = dsm_loss(net, batch, s, draws);
  std::uniform_int_distribution<Eigen::Index> pick(0, net.parameters().size() - 1);
  double worst = 0;
  const double eps = 1e-4;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index i = pick(rng);
    TinyScoreNet p = net, m = net;
    p.parameters()[i] += eps;
    m.parameters()[i] -= eps;
    Rng d1 = make_stream(3, 3), d2 = make_stream(3, 3);
    const double fd = (dsm_loss(static_cast<const ScoreModel&>(p), batch, s, d1).loss -
                       dsm_loss(static_cast<const ScoreModel&>(m), batch, s, d2).loss) /
                      (2 * eps);
    const double g = res.gradient[i];
    worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-8}));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("train: learns a single 8x8 target from a zero template") {
  const Array2 r = single_target();
  const GmmOracle oracle({r});
  const SigmaSchedule s(0.01, 5.0, 200);
  TrainConfig cfg;
  cfg.template_init = TemplateInit::Zero;
  cfg.learning_rate = 3e-2;

  // untrained baseline for contrast
  TinyScoreNet untrained(NetArchitecture::for_shape(8, 8, cfg.channels, cfg.embed, data_scale({r})));
  Rng init = make_stream(cfg.seed, 1);
  untrained.initialize(init);
  CHECK(relative_l2(untrained, oracle, r, 1.0, 50, 1) > 0.5);

  const auto res = train_score({r}, cfg, s);
  for (double sigma : {0.1, 1.0}) CHECK(relative_l2(res.net, oracle, r, sigma, 50, 2) <= 0.10);

  // descent: late moving average below the early one
  REQUIRE(res.loss_trace.size() == std::size_t(cfg.steps));
  double head = 0, tail = 0;
  for (int i = 0; i < 100; ++i) {
    head += res.loss_trace[std::size_t(i)];
    tail += res.loss_trace[res.loss_trace.size() - 1 - std::size_t(i)];
  }
  for (double v : res.loss_trace) CHECK(std::isfinite(v));
  CHECK(tail < head);

  // trained score points along the kernel target
  Rng rng = make_stream(4, 4);
  for (double sigma : {0.1, 1.0}) {
    const Array2 z = standard_normal(8, 8, rng);
    const Array2 a = res.net.evaluate(r + sigma * z, sigma);
    const Array2 b = -z / sigma;
    CHECK((a.cwiseProduct(b)).sum() / (a.norm() * b.norm()) >= 0.9);
  }
}

TEST_CASE("train: dataset-mean template also reaches the oracle") {
  const Array2 r = single_target();
  const GmmOracle oracle({r});
  const SigmaSchedule s(0.01, 5.0, 200);
  const auto res = train_score({r}, TrainConfig{}, s);
  for (double sigma : {0.1, 1.0}) CHECK(relative_l2(res.net, oracle, r, sigma, 50, 3) <= 0.10);
}

TEST_CASE("train: seeded runs are bitwise identical") {
  Rng rng = make_stream(10);
  const std::vector<Array2> data = {standard_normal(6, 6, rng), standard_normal(6, 6, rng)};
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.seed = 42;
  const SigmaSchedule s(0.01, 5.0, 50);
  const auto a = train_score(data, cfg, s), b = train_score(data, cfg, s);
  CHECK(a.net.parameters() == b.net.parameters());
  CHECK(a.loss_trace == b.loss_trace);
  cfg.seed = 43;
  CHECK(train_score(data, cfg, s).net.parameters() != a.net.parameters());
}

TEST_CASE("train: divergence is reported") {
  Rng rng = make_stream(11);
  const std::vector<Array2> data = {standard_normal(6, 6, rng)};
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.learning_rate = 1e300;
  const SigmaSchedule s(0.01, 5.0, 50);
  CHECK_THROWS_AS(train_score(data, cfg, s), DivergenceError);
  cfg.steps = 0;
  CHECK_THROWS_AS(train_score(data, cfg, s), ConfigError);
  CHECK_THROWS_AS(train_score({}, TrainConfig{}, s), std::invalid_argument);
}
