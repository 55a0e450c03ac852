#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "osmm/errors.hpp"

namespace osmm {

/// Row-major dense 2-D array. Rows are image rows (top to bottom) or
/// sinogram views; columns are image columns or detector bins.
template <typename Scalar>
using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Array2 = Grid<double>;

/// Pixel lattice of an image centred on the origin.
struct ImageGrid {
  int width = 0;
  int height = 0;
  double pixel_size = 1.0;

  double half_width() const { return 0.5 * width * pixel_size; }
  double half_height() const { return 0.5 * height * pixel_size; }
  double diagonal() const { return pixel_size * std::hypot(double(width), double(height)); }
  // Pixel centre of column i / row j; row 0 is the top (largest y).
  double x_center(int i) const { return (i + 0.5) * pixel_size - half_width(); }
  double y_center(int j) const { return half_height() - (j + 0.5) * pixel_size; }

  bool operator==(const ImageGrid&) const = default;
};

/// 2-D attenuation map.
template <typename Scalar>
struct BasicImage {
  Grid<Scalar> values;  // height x width
  double pixel_size = 1.0;

  BasicImage() = default;
  BasicImage(Grid<Scalar> v, double pixel) : values(std::move(v)), pixel_size(pixel) {}
  BasicImage(const ImageGrid& g) : values(Grid<Scalar>::Zero(g.height, g.width)), pixel_size(g.pixel_size) {}

  int width() const { return int(values.cols()); }
  int height() const { return int(values.rows()); }
  ImageGrid grid() const { return {width(), height(), pixel_size}; }

  void validate() const {
    if (width() < 1 || height() < 1) throw ShapeError("image must have at least one pixel");
    if (!(pixel_size > 0)) throw ConfigError("image pixel_size must be positive");
    if (!values.allFinite()) throw DivergenceError("image contains non-finite values");
  }
};

using Image = BasicImage<double>;

/// Parallel-beam acquisition: view v sits at angle v*pi/M, detector bin d at
/// u = (d - (D-1)/2) * spacing + offset.
struct SinogramGeometry {
  int num_views = 720;
  int num_detectors = 363;
  double detector_spacing = 1.0;
  double detector_offset = 0.0;

  double angle(int view) const { return view * std::numbers::pi / num_views; }
  double detector_position(int bin) const {
    return (bin - 0.5 * (num_detectors - 1)) * detector_spacing + detector_offset;
  }
  /// Fractional bin index of detector coordinate u.
  double bin_coordinate(double u) const {
    return (u - detector_offset) / detector_spacing + 0.5 * (num_detectors - 1);
  }

  void validate() const {
    if (num_views < 1 || num_detectors < 1) throw ConfigError("geometry needs at least one view and one detector");
    if (!(detector_spacing > 0)) throw ConfigError("detector_spacing must be positive");
    if (!std::isfinite(detector_offset)) throw ConfigError("detector_offset must be finite");
  }

  bool operator==(const SinogramGeometry&) const = default;
};

/// Smallest odd detector count whose span covers the image diagonal when the
/// detector spacing equals the pixel size.
inline SinogramGeometry default_geometry(const ImageGrid& grid, int num_views) {
  int detectors = int(std::ceil(std::hypot(double(grid.width), double(grid.height))));
  if (detectors % 2 == 0) ++detectors;
  return {num_views, detectors, grid.pixel_size, 0.0};
}

template <typename Scalar>
struct BasicSinogram {
  SinogramGeometry geometry;
  Grid<Scalar> values;  // num_views x num_detectors

  BasicSinogram() = default;
  explicit BasicSinogram(const SinogramGeometry& g)
      : geometry(g), values(Grid<Scalar>::Zero(g.num_views, g.num_detectors)) {}
  BasicSinogram(const SinogramGeometry& g, Grid<Scalar> v) : geometry(g), values(std::move(v)) {
    validate_shape();
  }

  void validate_shape() const {
    if (values.rows() != geometry.num_views || values.cols() != geometry.num_detectors)
      throw ShapeError("sinogram values do not match geometry (" + std::to_string(values.rows()) + "x" +
                       std::to_string(values.cols()) + " vs " + std::to_string(geometry.num_views) + "x" +
                       std::to_string(geometry.num_detectors) + ")");
  }
};

using Sinogram = BasicSinogram<double>;

/// Per-view subsampling pattern.
struct ViewMask {
  std::vector<bool> kept;

  ViewMask() = default;
  explicit ViewMask(std::vector<bool> k) : kept(std::move(k)) {}

  static ViewMask full(int num_views) { return ViewMask(std::vector<bool>(std::size_t(num_views), true)); }
  static ViewMask none(int num_views) { return ViewMask(std::vector<bool>(std::size_t(num_views), false)); }
  /// View i (0-based) kept iff i mod stride == 0.
  static ViewMask from_stride(int num_views, int stride) {
    if (num_views < 1 || stride < 1) throw ConfigError("stride mask needs num_views >= 1 and stride >= 1");
    std::vector<bool> k(std::size_t(num_views), false);
    for (int i = 0; i < num_views; i += stride) k[std::size_t(i)] = true;
    return ViewMask(std::move(k));
  }
  /// Uniformly spaced mask keeping `views` of `num_views`; views must divide num_views.
  static ViewMask keep_uniform(int num_views, int views) {
    if (views < 1 || num_views % views != 0)
      throw ConfigError("kept view count " + std::to_string(views) + " must divide " + std::to_string(num_views));
    return from_stride(num_views, num_views / views);
  }

  int size() const { return int(kept.size()); }
  bool operator[](int i) const { return kept[std::size_t(i)]; }
  int count() const {
    int c = 0;
    for (bool b : kept) c += b ? 1 : 0;
    return c;
  }
  std::string to_string() const {
    std::string s;
    s.reserve(kept.size());
    for (bool b : kept) s.push_back(b ? '1' : '0');
    return s;
  }
  static ViewMask parse(const std::string& s) {
    std::vector<bool> k;
    k.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw FormatError("mask string must contain only 0/1");
      k.push_back(c == '1');
    }
    return ViewMask(std::move(k));
  }

  bool operator==(const ViewMask&) const = default;
};

/// Measured sinogram: missing views are zero rows, the mask says which rows are real.
template <typename Scalar>
struct BasicMaskedSinogram {
  BasicSinogram<Scalar> data;
  ViewMask mask;
};

using MaskedSinogram = BasicMaskedSinogram<double>;

}  // namespace osmm
