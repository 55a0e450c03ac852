#include "osmm/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace osmm {

bool Ellipse::contains(double x, double y) const {
  const double dx = x - cx, dy = y - cy;
  const double c = std::cos(angle), s = std::sin(angle);
  const double u = (dx * c + dy * s) / semi_x;
  const double v = (-dx * s + dy * c) / semi_y;
  return u * u + v * v <= 1.0;
}

EllipsePhantomSpec shepp_logan_spec() {
  constexpr double deg = std::numbers::pi / 180.0;
  return {
      {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
      {0.22, 0.0, 0.11, 0.31, -18.0 * deg, -0.02},
      {-0.22, 0.0, 0.16, 0.41, 18.0 * deg, -0.02},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
      {0.0, -0.605, 0.023, 0.023, 0.0, 0.01},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
  };
}

double evaluate_phantom(const EllipsePhantomSpec& spec, double x, double y) {
  double v = 0.0;
  for (const auto& e : spec)
    if (e.contains(x, y)) v += e.intensity;
  return v;
}

Image rasterize(const EllipsePhantomSpec& spec, int size, bool clamp_nonnegative) {
  if (size < 1) throw ConfigError("phantom size must be positive");
  Image img(ImageGrid{size, size, 2.0 / size});
  const auto grid = img.grid();
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i) {
      double v = evaluate_phantom(spec, grid.x_center(i), grid.y_center(j));
      if (clamp_nonnegative && v < 0) v = 0;
      img.values(j, i) = v;
    }
  return img;
}

Image shepp_logan(int size) {
  if (size < 16) throw ConfigError("Shepp-Logan phantom needs size >= 16");
  return rasterize(shepp_logan_spec(), size);
}

EllipsePhantomSpec random_phantom_spec(int count, Rng& rng) {
  if (count < 1) throw ConfigError("random phantom needs at least one ellipse");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  EllipsePhantomSpec spec;
  Ellipse body;
  body.cx = between(-0.05, 0.05);
  body.cy = between(-0.05, 0.05);
  body.semi_x = between(0.55, 0.8);
  body.semi_y = between(0.6, 0.85);
  body.angle = between(-0.3, 0.3);
  body.intensity = between(0.8, 1.2);
  spec.push_back(body);

  for (int k = 1; k < count; ++k) {
    Ellipse e;
    e.semi_x = between(0.03, 0.25);
    e.semi_y = between(0.03, 0.25);
    const double reach = std::max(e.semi_x, e.semi_y);
    const double radius = between(0.0, std::max(0.0, 0.5 - reach));
    const double phase = between(0.0, 2 * std::numbers::pi);
    e.cx = body.cx + radius * std::cos(phase);
    e.cy = body.cy + radius * std::sin(phase);
    e.angle = between(0.0, std::numbers::pi);
    e.intensity = between(-0.4, 0.6);
    spec.push_back(e);
  }
  return spec;
}

Image random_phantom(int size, int count, Rng& rng) { return rasterize(random_phantom_spec(count, rng), size, true); }

}  // namespace osmm
