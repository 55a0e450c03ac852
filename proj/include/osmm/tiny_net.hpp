#pragma once

#include <functional>
#include <string>

#include "osmm/rng.hpp"
#include "osmm/score.hpp"

namespace osmm {

/// Shape and width of a TinyScoreNet. The grid shape is part of the model:
/// a subset model sees (M/N) x D inputs, the whole model M x D.
struct NetArchitecture {
  int rows = 0;
  int cols = 0;
  int channels = 8;          // base width C; the bottleneck runs at 2C
  int embed = 16;            // noise embedding width
  int template_stride = 1;   // template resolution divisor
  double sigma_data = 1.0;   // spread of the data around the template

  /// Picks the smallest template stride keeping the template <= max_template entries.
  static NetArchitecture for_shape(int rows, int cols, int channels = 8, int embed = 16, double sigma_data = 1.0,
                                   int max_template = 65536);

  int template_rows() const { return (rows + template_stride - 1) / template_stride; }
  int template_cols() const { return (cols + template_stride - 1) / template_stride; }
  int parameter_count() const;
  void validate() const;

  bool operator==(const NetArchitecture&) const = default;
};

/// Small convolutional encoder-decoder score model.
///
/// The network predicts a denoised estimate around a learned template T
/// (stored at grid / template_stride resolution, upsampled by replication):
///
///   D(x, sigma) = c_skip x + (1 - c_skip) U(T) + c_out F
///   s(x, sigma) = (D - x) / sigma^2
///
/// with c_skip = sd^2 / (sigma^2 + sd^2), c_out = sigma sd / sqrt(sigma^2 + sd^2)
/// and sd = sigma_data. With F = 0 this is the exact score of N(T, sd^2 I).
/// F comes from a conv stack over a0 = c_in [x, U(T)], c_in = 1/sqrt(sigma^2 + sd^2);
/// a one-hidden-layer embedding e of log(sigma) shifts every hidden layer and
/// sets an output log-gain:
///
///   h1 = silu(conv3x3(a0))            H x W,   C
///   h2 = silu(conv3x3/2(h1))          H/2,    2C
///   h3 = silu(conv3x3(h2))            H/2,    2C
///   h4 = silu(conv3x3([up(h3), h1]))  H x W,   C
///   F  = (conv3x3(h4) + alpha a0[0] + beta a0[1]) * exp(gain(e))
class TinyScoreNet final : public ScoreModel {
 public:
  TinyScoreNet() = default;
  explicit TinyScoreNet(const NetArchitecture& arch);

  /// Kaiming-normal conv weights, zero output gain. The template starts at
  /// `template_init` (block-averaged to the template grid) when given, else zero.
  void initialize(Rng& rng, const Array2* template_init = nullptr);

  Array2 evaluate(const Array2& x, double sigma) const override;

  /// Evaluates the score and adds d(loss)/d(theta) to `grad`, where
  /// d(loss)/d(score) = upstream(score).
  Array2 evaluate_with_gradient(const Array2& x, double sigma,
                                const std::function<Array2(const Array2&)>& upstream, Eigen::VectorXd& grad) const;

  const NetArchitecture& architecture() const { return arch_; }
  const Eigen::VectorXd& parameters() const { return theta_; }
  Eigen::VectorXd& parameters() { return theta_; }

 private:
  struct Tape;
  struct Layout;

  Array2 forward(const Array2& x, double sigma, Tape* tape) const;
  void backward(const Tape& tape, const Array2& dscore, Eigen::VectorXd& grad) const;
  Layout layout() const;

  NetArchitecture arch_;
  Eigen::VectorXd theta_;
};

inline Array2 net_score(const TinyScoreNet& net, const Array2& x, double sigma) { return net.evaluate(x, sigma); }

}  // namespace osmm
