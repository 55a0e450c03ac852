#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "osmm/types.hpp"

namespace osmm {

/// Infinite line origin + alpha * direction.
struct Ray {
  Eigen::Vector2d origin;
  Eigen::Vector2d direction;
};

/// Parallel ray of view `view`, detector bin `bin`: the line x cos(theta) + y sin(theta) = u.
inline Ray parallel_ray(const SinogramGeometry& geom, int view, int bin) {
  const double theta = geom.angle(view);
  const double u = geom.detector_position(bin);
  const double c = std::cos(theta), s = std::sin(theta);
  return {{u * c, u * s}, {-s, c}};
}

/// Siddon traversal of `ray` through the pixel lattice. Calls
/// visit(row, col, length) once per pixel segment in order along the ray.
/// Segment lengths telescope, so their sum is the chord length of the ray
/// inside the grid up to rounding.
template <typename Visit>
void siddon_trace(const ImageGrid& g, const Ray& ray, Visit&& visit) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double ox = ray.origin.x(), oy = ray.origin.y();
  const double dx = ray.direction.x(), dy = ray.direction.y();
  const double norm = std::hypot(dx, dy);
  if (!(norm > 0)) throw std::invalid_argument("ray direction must be non-zero");

  const double p = g.pixel_size;
  const double xmin = -g.half_width(), xmax = g.half_width();
  const double ymin = -g.half_height(), ymax = g.half_height();

  double a_in = -inf, a_out = inf;
  if (dx != 0) {
    const double a1 = (xmin - ox) / dx, a2 = (xmax - ox) / dx;
    a_in = std::max(a_in, std::min(a1, a2));
    a_out = std::min(a_out, std::max(a1, a2));
  } else if (ox < xmin || ox >= xmax) {
    return;
  }
  if (dy != 0) {
    const double a1 = (ymin - oy) / dy, a2 = (ymax - oy) / dy;
    a_in = std::max(a_in, std::min(a1, a2));
    a_out = std::min(a_out, std::max(a1, a2));
  } else if (oy <= ymin || oy > ymax) {
    return;
  }
  if (!(a_out > a_in)) return;

  // Next plane crossing per axis, recomputed from the plane index to avoid drift.
  int ix = 0, iy = 0, sx = 0, sy = 0;
  double ax = inf, ay = inf;
  if (dx != 0) {
    const double xi = (ox + a_in * dx - xmin) / p;
    sx = dx > 0 ? 1 : -1;
    ix = dx > 0 ? int(std::floor(xi)) + 1 : int(std::ceil(xi)) - 1;
    ax = (xmin + ix * p - ox) / dx;
    while (ax <= a_in) {
      ix += sx;
      ax = (xmin + ix * p - ox) / dx;
    }
  }
  if (dy != 0) {
    const double yi = (oy + a_in * dy - ymin) / p;
    sy = dy > 0 ? 1 : -1;
    iy = dy > 0 ? int(std::floor(yi)) + 1 : int(std::ceil(yi)) - 1;
    ay = (ymin + iy * p - oy) / dy;
    while (ay <= a_in) {
      iy += sy;
      ay = (ymin + iy * p - oy) / dy;
    }
  }

  double a = a_in;
  while (a < a_out) {
    const double b = std::min({ax, ay, a_out});
    if (b > a) {
      const double mid = 0.5 * (a + b);
      const int col = std::clamp(int(std::floor((ox + mid * dx - xmin) / p)), 0, g.width - 1);
      const int row = std::clamp(int(std::floor((ymax - (oy + mid * dy)) / p)), 0, g.height - 1);
      visit(row, col, (b - a) * norm);
    }
    if (b == ax) {
      ix += sx;
      ax = (xmin + ix * p - ox) / dx;
    }
    if (b == ay) {
      iy += sy;
      ay = (ymin + iy * p - oy) / dy;
    }
    a = b;
  }
}

/// Exact line integral of the piecewise-constant image along `ray`.
template <typename Scalar>
Scalar siddon_line_integral(const BasicImage<Scalar>& image, const Ray& ray) {
  Scalar sum(0);
  siddon_trace(image.grid(), ray, [&](int row, int col, double len) { sum += Scalar(len) * image.values(row, col); });
  return sum;
}

/// Throws ConfigError when the detector span does not cover the image diagonal.
inline void check_coverage(const ImageGrid& grid, const SinogramGeometry& geom) {
  geom.validate();
  const double reach = 0.5 * geom.num_detectors * geom.detector_spacing - std::abs(geom.detector_offset);
  if (reach < 0.5 * grid.diagonal() * (1.0 - 1e-12))
    throw ConfigError("detector span " + std::to_string(geom.num_detectors * geom.detector_spacing) +
                      " does not cover image diagonal " + std::to_string(grid.diagonal()));
}

/// x = A I with A applied ray by ray.
template <typename Scalar>
BasicSinogram<Scalar> forward_project(const BasicImage<Scalar>& image, const SinogramGeometry& geom) {
  image.validate();
  check_coverage(image.grid(), geom);
  BasicSinogram<Scalar> out(geom);
  for (int v = 0; v < geom.num_views; ++v)
    for (int d = 0; d < geom.num_detectors; ++d) out.values(v, d) = siddon_line_integral(image, parallel_ray(geom, v, d));
  return out;
}

/// P(Lambda) x: unmeasured rows zeroed, measured rows copied exactly.
template <typename Scalar>
BasicMaskedSinogram<Scalar> subsample(const BasicSinogram<Scalar>& x, const ViewMask& mask) {
  if (mask.size() != x.geometry.num_views) throw ShapeError("mask length does not match number of views");
  if (mask.count() == 0) throw ConfigError("view mask keeps no views");
  BasicMaskedSinogram<Scalar> out{x, mask};
  for (int v = 0; v < x.geometry.num_views; ++v)
    if (!mask[v]) out.data.values.row(v).setZero();
  return out;
}

template <typename Scalar>
BasicMaskedSinogram<Scalar> subsample(const BasicMaskedSinogram<Scalar>& x, const ViewMask& mask) {
  return subsample(x.data, mask);
}

/// Zero-padded FFT length used by the ramp filter: next power of two >= 2D.
inline int ramp_padded_length(int num_detectors) {
  int n = 1;
  while (n < 2 * num_detectors) n <<= 1;
  return n;
}

/// Spatial Ram-Lak kernel at integer tap k: 1/(4 s^2) at 0, 0 at even taps,
/// -1/(pi k s)^2 at odd taps.
inline double ram_lak_tap(int k, double spacing) {
  if (k == 0) return 1.0 / (4.0 * spacing * spacing);
  if (k % 2 == 0) return 0.0;
  const double t = std::numbers::pi * k * spacing;
  return -1.0 / (t * t);
}

/// Frequency response of the circularly wrapped Ram-Lak kernel on `length`
/// bins, with the DC bin pinned to zero.
inline std::vector<double> ramp_frequency_response(int length, double spacing) {
  std::vector<double> kernel(std::size_t(length), 0.0);
  for (int k = 0; k < length; ++k) {
    const int tap = k <= length / 2 ? k : k - length;
    kernel[std::size_t(k)] = ram_lak_tap(tap, spacing);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, kernel);
  std::vector<double> response(static_cast<std::size_t>(length));
  for (int k = 0; k < length; ++k) response[std::size_t(k)] = spectrum[std::size_t(k)].real();
  response[0] = 0.0;
  return response;
}

/// Convolves every view with the Ram-Lak kernel (no quadrature weight).
template <typename Scalar>
BasicSinogram<Scalar> ramp_filter(const BasicSinogram<Scalar>& x) {
  const auto& geom = x.geometry;
  x.validate_shape();
  if (geom.num_detectors < 2) throw ShapeError("ramp filter needs at least two detector bins");
  const int length = ramp_padded_length(geom.num_detectors);
  const auto response = ramp_frequency_response(length, geom.detector_spacing);

  Eigen::FFT<double> fft;
  std::vector<double> row(static_cast<std::size_t>(length));
  std::vector<std::complex<double>> spectrum;
  std::vector<double> filtered;
  BasicSinogram<Scalar> out(geom);
  for (int v = 0; v < geom.num_views; ++v) {
    std::fill(row.begin(), row.end(), 0.0);
    for (int d = 0; d < geom.num_detectors; ++d) row[std::size_t(d)] = double(x.values(v, d));
    fft.fwd(spectrum, row);
    for (int k = 0; k < length; ++k) spectrum[std::size_t(k)] *= response[std::size_t(k)];
    fft.inv(filtered, spectrum);
    for (int d = 0; d < geom.num_detectors; ++d) out.values(v, d) = Scalar(filtered[std::size_t(d)]);
  }
  return out;
}

/// Pixel-driven back projection of the listed views with linear detector
/// interpolation. Views are accumulated in list order.
template <typename Scalar>
BasicImage<Scalar> back_project(const BasicSinogram<Scalar>& q, const std::vector<int>& views, const ImageGrid& grid,
                                double scale) {
  const auto& geom = q.geometry;
  BasicImage<Scalar> image(grid);
  std::vector<double> xs(std::size_t(grid.width)), ys(std::size_t(grid.height));
  for (int i = 0; i < grid.width; ++i) xs[std::size_t(i)] = grid.x_center(i);
  for (int j = 0; j < grid.height; ++j) ys[std::size_t(j)] = grid.y_center(j);
  const int last = geom.num_detectors - 1;
  for (int v : views) {
    const double theta = geom.angle(v);
    const double c = std::cos(theta), s = std::sin(theta);
    for (int j = 0; j < grid.height; ++j) {
      for (int i = 0; i < grid.width; ++i) {
        const double t = geom.bin_coordinate(xs[std::size_t(i)] * c + ys[std::size_t(j)] * s);
        const double f = std::floor(t);
        const int i0 = int(f);
        const double w = t - f;
        Scalar val(0);
        if (i0 >= 0 && i0 < last)
          val = Scalar(1.0 - w) * q.values(v, i0) + Scalar(w) * q.values(v, i0 + 1);
        else if (i0 == last && w == 0.0)
          val = q.values(v, last);
        image.values(j, i) += val;
      }
    }
  }
  image.values *= Scalar(scale);
  return image;
}

/// Filtered back projection over all views of a [0, pi) parallel sinogram.
/// Zero-filled views are treated as measured zeros.
template <typename Scalar>
BasicImage<Scalar> fbp(const BasicSinogram<Scalar>& x, const ImageGrid& grid) {
  const auto q = ramp_filter(x);
  std::vector<int> views(std::size_t(x.geometry.num_views));
  for (int v = 0; v < x.geometry.num_views; ++v) views[std::size_t(v)] = v;
  const double scale = std::numbers::pi / x.geometry.num_views * x.geometry.detector_spacing;
  return back_project(q, views, grid, scale);
}

/// Sparse-view FBP: only the kept views are back projected, weighted by
/// pi / (number of kept views).
template <typename Scalar>
BasicImage<Scalar> fbp(const BasicMaskedSinogram<Scalar>& y, const ImageGrid& grid) {
  if (y.mask.size() != y.data.geometry.num_views) throw ShapeError("mask length does not match number of views");
  const auto q = ramp_filter(y.data);
  std::vector<int> views;
  for (int v = 0; v < y.mask.size(); ++v)
    if (y.mask[v]) views.push_back(v);
  if (views.empty()) throw ConfigError("view mask keeps no views");
  const double scale = std::numbers::pi / double(views.size()) * y.data.geometry.detector_spacing;
  return back_project(q, views, grid, scale);
}

}  // namespace osmm
