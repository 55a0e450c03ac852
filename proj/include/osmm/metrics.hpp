#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "osmm/types.hpp"

namespace osmm {

struct MetricReport {
  double psnr = 0.0;        // dB, +inf for identical images
  double ssim = 0.0;
  double mse = 0.0;         // on intensities divided by data_range
  double data_range = 1.0;
};

struct SsimParams {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

namespace detail {

template <typename A, typename B>
void require_same_shape(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("metric inputs differ in shape");
}

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = 0.5 * (size - 1);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - c;
    w[std::size_t(i)] = std::exp(-d * d / (2 * sigma * sigma));
    sum += w[std::size_t(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable 'valid' filtering: output is (rows - size + 1) x (cols - size + 1).
inline Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& in, const std::vector<double>& w) {
  const Eigen::Index k = Eigen::Index(w.size());
  const Eigen::Index orows = in.rows() - k + 1, ocols = in.cols() - k + 1;
  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(in.rows(), ocols);
  for (Eigen::Index j = 0; j < ocols; ++j)
    for (Eigen::Index i = 0; i < k; ++i) tmp.col(j) += w[std::size_t(i)] * in.col(j + i);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(orows, ocols);
  for (Eigen::Index r = 0; r < orows; ++r)
    for (Eigen::Index i = 0; i < k; ++i) out.row(r) += w[std::size_t(i)] * tmp.row(r + i);
  return out;
}

}  // namespace detail

/// Mean squared elementwise difference.
template <typename A, typename B>
double mse(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_same_shape(a, b);
  if (a.size() == 0) throw ShapeError("metric inputs are empty");
  return (a.template cast<double>() - b.template cast<double>()).squaredNorm() / double(a.size());
}

/// 10 log10(range^2 / mse); +inf when the inputs are identical.
template <typename A, typename B>
double psnr(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double data_range) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / m);
}

/// Mean SSIM over all fully-contained Gaussian windows.
template <typename A, typename B>
double ssim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double data_range,
            const SsimParams& params = {}) {
  detail::require_same_shape(a, b);
  if (a.rows() < params.window || a.cols() < params.window)
    throw ShapeError("image smaller than the SSIM window");
  const Eigen::MatrixXd x = a.template cast<double>(), y = b.template cast<double>();
  const auto w = detail::gaussian_window(params.window, params.gaussian_sigma);
  const double c1 = (params.k1 * data_range) * (params.k1 * data_range);
  const double c2 = (params.k2 * data_range) * (params.k2 * data_range);

  const Eigen::MatrixXd mx = detail::filter_valid(x, w), my = detail::filter_valid(y, w);
  const Eigen::MatrixXd sxx = detail::filter_valid(x.cwiseProduct(x), w) - mx.cwiseProduct(mx);
  const Eigen::MatrixXd syy = detail::filter_valid(y.cwiseProduct(y), w) - my.cwiseProduct(my);
  const Eigen::MatrixXd sxy = detail::filter_valid(x.cwiseProduct(y), w) - mx.cwiseProduct(my);

  const auto num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
  const auto den = (mx.cwiseProduct(mx).array() + my.cwiseProduct(my).array() + c1) * (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

/// PSNR/SSIM/MSE of `test` against `reference`, normalised by the reference maximum.
template <typename Scalar>
MetricReport compare(const BasicImage<Scalar>& reference, const BasicImage<Scalar>& test) {
  MetricReport r;
  const double peak = double(reference.values.maxCoeff());
  r.data_range = peak > 0 ? peak : 1.0;
  r.mse = mse(reference.values, test.values) / (r.data_range * r.data_range);
  r.psnr = psnr(reference.values, test.values, r.data_range);
  r.ssim = ssim(reference.values, test.values, r.data_range);
  return r;
}

}  // namespace osmm
