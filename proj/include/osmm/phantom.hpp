#pragma once

#include <vector>

#include "osmm/rng.hpp"
#include "osmm/types.hpp"

namespace osmm {

/// Ellipse on the [-1, 1]^2 square; semi_x/semi_y are the semi-axes before
/// rotating counter-clockwise by `angle` radians.
struct Ellipse {
  double cx = 0, cy = 0;
  double semi_x = 0, semi_y = 0;
  double angle = 0;
  double intensity = 0;

  bool contains(double x, double y) const;
};

using EllipsePhantomSpec = std::vector<Ellipse>;

/// The original ten-ellipse Shepp-Logan head.
EllipsePhantomSpec shepp_logan_spec();

/// Sum of intensities of the ellipses containing (x, y).
double evaluate_phantom(const EllipsePhantomSpec& spec, double x, double y);

/// Samples the phantom at pixel centres of a size x size grid spanning [-1, 1]^2
/// (pixel size 2/size). Optionally clamps negative sums to zero.
Image rasterize(const EllipsePhantomSpec& spec, int size, bool clamp_nonnegative = false);

/// Throws ConfigError for size < 16.
Image shepp_logan(int size);

/// A body ellipse plus count-1 random interior ellipses, all inside the unit disk.
EllipsePhantomSpec random_phantom_spec(int count, Rng& rng);

/// Rasterised random phantom, clamped to non-negative values.
Image random_phantom(int size, int count, Rng& rng);

}  // namespace osmm
