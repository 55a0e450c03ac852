#include "osmm/score.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace osmm {

GmmOracle::GmmOracle(std::vector<Array2> references) : refs_(std::move(references)) {
  if (refs_.empty()) throw std::invalid_argument("oracle needs at least one reference");
  for (const auto& r : refs_)
    if (r.rows() != refs_.front().rows() || r.cols() != refs_.front().cols())
      throw ShapeError("oracle references differ in shape");
}

Eigen::VectorXd GmmOracle::weights(const Array2& x, double sigma) const {
  if (!(sigma > 0)) throw std::invalid_argument("oracle score needs sigma > 0");
  if (x.rows() != refs_.front().rows() || x.cols() != refs_.front().cols()) throw ShapeError("oracle input shape");
  const Eigen::Index k = Eigen::Index(refs_.size());
  Eigen::VectorXd logits(k);
  for (Eigen::Index i = 0; i < k; ++i) logits[i] = -(x - refs_[std::size_t(i)]).squaredNorm() / (2 * sigma * sigma);
  const double top = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - top).exp();
  return w / w.sum();
}

Array2 GmmOracle::evaluate(const Array2& x, double sigma) const {
  const Eigen::VectorXd w = weights(x, sigma);
  Array2 mean = Array2::Zero(x.rows(), x.cols());
  for (std::size_t i = 0; i < refs_.size(); ++i)
    if (w[Eigen::Index(i)] > 0) mean += w[Eigen::Index(i)] * refs_[i];
  return (mean - x) / (sigma * sigma);
}

double GmmOracle::log_density(const Array2& x, double sigma) const {
  if (!(sigma > 0)) throw std::invalid_argument("oracle density needs sigma > 0");
  const Eigen::Index k = Eigen::Index(refs_.size());
  Eigen::VectorXd logits(k);
  for (Eigen::Index i = 0; i < k; ++i) logits[i] = -(x - refs_[std::size_t(i)]).squaredNorm() / (2 * sigma * sigma);
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  const double dim = double(x.size());
  return lse - std::log(double(k)) - 0.5 * dim * std::log(2 * std::numbers::pi * sigma * sigma);
}

GaussianOracle::GaussianOracle(Array2 mean, double std_dev) : mean_(std::move(mean)), var_(std_dev * std_dev) {
  if (!(std_dev >= 0)) throw std::invalid_argument("std_dev must be non-negative");
}

Array2 GaussianOracle::evaluate(const Array2& x, double sigma) const {
  if (x.rows() != mean_.rows() || x.cols() != mean_.cols()) throw ShapeError("oracle input shape");
  return -(x - mean_) / (var_ + sigma * sigma);
}

}  // namespace osmm
