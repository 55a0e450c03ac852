#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chord.hpp"
#include "osmm/tomo.hpp"

using namespace osmm;
using osmm::testing::chord_length;

namespace {

Image disk(int size, double radius, double mu) {
  Image img(ImageGrid{size, size, 2.0 / size});
  const auto g = img.grid();
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i)
      if (std::hypot(g.x_center(i), g.y_center(j)) <= radius) img.values(j, i) = mu;
  return img;
}

}  // namespace

TEST_CASE("siddon: axis-aligned row of eight unit pixels") {
  Image img(Array2::Ones(8, 8), 1.0);
  CHECK(siddon_line_integral(img, Ray{{-10, 0.5}, {1, 0}}) == doctest::Approx(8.0).epsilon(1e-12));
  // vertical, through column 2
  CHECK(siddon_line_integral(img, Ray{{-1.5, 10}, {0, -3}}) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("siddon: ray missing the grid") {
  Image img(Array2::Ones(8, 8), 1.0);
  CHECK(siddon_line_integral(img, Ray{{-10, 20}, {1, 0}}) == 0.0);
  CHECK(siddon_line_integral(img, Ray{{-10, -20}, {1, 0.1}}) == 0.0);
}

TEST_CASE("siddon: 45 degree diagonal through one unit pixel") {
  Image img(Array2::Ones(1, 1), 1.0);
  CHECK(siddon_line_integral(img, Ray{{-0.5, -0.5}, {1, 1}}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(siddon_line_integral(img, Ray{{3, -2}, {1, 1}}) == doctest::Approx(0.0));
}

TEST_CASE("siddon: zero direction is rejected") {
  Image img(Array2::Ones(2, 2), 1.0);
  CHECK_THROWS_AS(siddon_line_integral(img, Ray{{0, 0}, {0, 0}}), std::invalid_argument);
}

TEST_CASE("siddon: segment lengths sum to the chord") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5), ang(0, 2 * std::numbers::pi);
  for (const ImageGrid g : {ImageGrid{37, 23, 0.07}, ImageGrid{64, 64, 2.0 / 64}}) {
    double worst = 0;
    for (int k = 0; k < 2000; ++k) {
      const double a = ang(rng);
      Ray r{{u(rng), u(rng)}, {std::cos(a) * (0.5 + k % 3), std::sin(a) * (0.5 + k % 3)}};
      double total = 0;
      siddon_trace(g, r, [&](int row, int col, double len) {
        CHECK((row >= 0 && row < g.height && col >= 0 && col < g.width));
        CHECK(len > 0);
        total += len;
      });
      worst = std::max(worst, std::abs(total - chord_length(g, r)));
    }
    CHECK(worst <= 1e-9);
  }
  // detector rays of the default geometry, including the axis-parallel ones
  const ImageGrid g{64, 64, 2.0 / 64};
  const auto geom = default_geometry(g, 16);
  double worst = 0;
  for (int v = 0; v < geom.num_views; ++v)
    for (int d = 0; d < geom.num_detectors; ++d) {
      const Ray r = parallel_ray(geom, v, d);
      double total = 0;
      siddon_trace(g, r, [&](int, int, double len) { total += len; });
      worst = std::max(worst, std::abs(total - chord_length(g, r)));
    }
  CHECK(worst <= 1e-9);
}

TEST_CASE("geometry: default detector count and coverage") {
  const ImageGrid g{256, 256, 2.0 / 256};
  const auto geom = default_geometry(g, 720);
  CHECK(geom.num_detectors == 363);
  CHECK(geom.detector_spacing == g.pixel_size);
  CHECK(geom.angle(0) == 0.0);
  CHECK(std::abs(geom.angle(360) - std::numbers::pi / 2) <= 1e-15);
  CHECK_NOTHROW(check_coverage(g, geom));
  auto narrow = geom;
  narrow.num_detectors = 255;
  CHECK_THROWS_AS(check_coverage(g, narrow), ConfigError);
  CHECK_THROWS_AS(forward_project(Image(g), narrow), ConfigError);
}

TEST_CASE("forward_project: centred disk chord") {
  const int size = 128;
  const double r = 0.5, mu = 0.8;
  const Image img = disk(size, r, mu);
  const auto geom = default_geometry(img.grid(), 90);
  const auto s = forward_project(img, geom);
  const int centre = (geom.num_detectors - 1) / 2;
  for (int v = 0; v < geom.num_views; ++v)
    CHECK(std::abs(s.values(v, centre) - 2 * r * mu) <= 2 * img.pixel_size * mu);
}

TEST_CASE("forward_project: zero image gives zero sinogram") {
  const Image img(ImageGrid{32, 32, 2.0 / 32});
  const auto s = forward_project(img, default_geometry(img.grid(), 24));
  CHECK(s.values.isZero(0.0));
}

TEST_CASE("forward_project: off-centre pixel traces a sinusoid") {
  const int size = 64;
  Image img(ImageGrid{size, size, 2.0 / size});
  const int row = 12, col = 45;
  img.values(row, col) = 1.0;
  const auto g = img.grid();
  const double x0 = g.x_center(col), y0 = g.y_center(row);
  const double c = std::hypot(x0, y0), phi = std::atan2(y0, x0);
  const auto geom = default_geometry(g, 180);
  const auto s = forward_project(img, geom);
  for (int v = 0; v < geom.num_views; ++v) {
    Eigen::Index best;
    s.values.row(v).maxCoeff(&best);
    const double expected = c * std::cos(geom.angle(v) - phi);
    CHECK(std::abs(geom.detector_position(int(best)) - expected) <= geom.detector_spacing);
  }
}

TEST_CASE("forward_project: linearity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const ImageGrid g{48, 48, 2.0 / 48};
  Image a(g), b(g);
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    a.values.data()[i] = u(rng);
    b.values.data()[i] = u(rng);
  }
  const double alpha = 1.7, beta = -0.45;
  const auto geom = default_geometry(g, 60);
  const Image combo(alpha * a.values + beta * b.values, g.pixel_size);
  const Array2 lhs = forward_project(combo, geom).values;
  const Array2 rhs = alpha * forward_project(a, geom).values + beta * forward_project(b, geom).values;
  CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());
}

namespace {

// Worst relative deviation of sum_d x[v,d] * spacing from the image mass.
double mass_spread(int size, double width_px, int views, int refine) {
  Image img(ImageGrid{size, size, 2.0 / size});
  const auto g = img.grid();
  const double width = width_px * g.pixel_size;
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i) {
      const double x = g.x_center(i) - 0.05, y = g.y_center(j) + 0.1;
      img.values(j, i) = std::exp(-(x * x + y * y) / (2 * width * width));
    }
  auto geom = default_geometry(g, views);
  geom.detector_spacing /= refine;
  geom.num_detectors = geom.num_detectors * refine + (refine > 1 ? 1 : 0);
  const auto s = forward_project(img, geom);
  const double mass = img.values.sum() * g.pixel_size * g.pixel_size;
  double worst = 0;
  for (int v = 0; v < geom.num_views; ++v)
    worst = std::max(worst, std::abs(s.values.row(v).sum() * geom.detector_spacing - mass) / mass);
  return worst;
}

}  // namespace

// Point-sampled detectors alias the pixel footprint, so the per-view mass of
// a pixelated object is only angle-independent up to a sampling error that
// shrinks as the detector pitch is refined.
TEST_CASE("forward_project: mass is nearly the same at every angle") {
  const double coarse = mass_spread(128, 12, 180, 1);
  CHECK(coarse <= 2e-4);
  const double fine = mass_spread(128, 12, 180, 4);
  CHECK(fine <= coarse / 10);
  // the theta = 0 view samples the footprint exactly
  CHECK(mass_spread(64, 6, 1, 1) <= 1e-12);
}

TEST_CASE("subsample: stride 12 keeps 60 of 720, kept rows exact, idempotent") {
  const SinogramGeometry geom{720, 5, 1.0, 0.0};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Sinogram x(geom);
  for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values.data()[i] = n(rng);
  const auto mask = ViewMask::from_stride(720, 12);
  CHECK(mask.count() == 60);
  CHECK(ViewMask::keep_uniform(720, 60) == mask);
  const auto y = subsample(x, mask);
  for (int v = 0; v < 720; ++v) {
    if (mask[v])
      CHECK((y.data.values.row(v).array() == x.values.row(v).array()).all());
    else
      CHECK(y.data.values.row(v).isZero(0.0));
  }
  const auto yy = subsample(y, mask);
  CHECK((yy.data.values.array() == y.data.values.array()).all());
  CHECK(yy.mask == y.mask);

  const auto full = subsample(x, ViewMask::full(720));
  CHECK((full.data.values.array() == x.values.array()).all());
  CHECK_THROWS_AS(subsample(x, ViewMask::full(719)), ShapeError);
  CHECK_THROWS_AS(subsample(x, ViewMask::none(720)), ConfigError);
}

TEST_CASE("ramp: DC is removed") {
  for (int d : {8, 91, 363}) {
    const int len = ramp_padded_length(d);
    CHECK(len >= 2 * d);
    CHECK((len & (len - 1)) == 0);
    const auto resp = ramp_frequency_response(len, 0.3);
    CHECK(resp[0] == 0.0);
    // the response grows away from DC like |f|
    CHECK(resp[1] > 0);
    CHECK(resp[std::size_t(len / 4)] > resp[1]);
  }
}

TEST_CASE("ramp: impulse response is the discrete Ram-Lak kernel") {
  const double dd = 2.0 / 256;
  const SinogramGeometry geom{2, 363, dd, 0.0};
  Sinogram x(geom);
  const int c = 181;
  x.values(0, c) = 1.0;
  const auto q = ramp_filter(x);
  const double h0 = 1.0 / (4 * dd * dd);
  for (int k = -c; k <= c; ++k) {
    double expected = 0.0;
    if (k == 0)
      expected = h0;
    else if (k % 2 != 0)
      expected = -1.0 / std::pow(std::numbers::pi * k * dd, 2);
    CHECK(std::abs(q.values(0, c + k) - expected) <= 1e-5 * h0);
  }
  CHECK(q.values.row(1).isZero(1e-9));
}

TEST_CASE("ramp: filtering twice differs from once") {
  const SinogramGeometry geom{1, 33, 1.0, 0.0};
  Sinogram x(geom);
  x.values(0, 16) = 1.0;
  const auto once = ramp_filter(x);
  const auto twice = ramp_filter(once);
  CHECK((twice.values - once.values).norm() > 1e-3);
}

TEST_CASE("ramp: needs two detector bins") {
  CHECK_THROWS_AS(ramp_filter(Sinogram(SinogramGeometry{3, 1, 1.0, 0.0})), ShapeError);
}

TEST_CASE("fbp: zero sinogram gives zero image") {
  const ImageGrid g{32, 32, 2.0 / 32};
  const Sinogram s(default_geometry(g, 30));
  CHECK(fbp(s, g).values.isZero(0.0));
}

TEST_CASE("fbp: recovers a uniform disk") {
  const int size = 128;
  const double mu = 1.0;
  const Image img = disk(size, 0.6, mu);
  const auto g = img.grid();
  const auto rec = fbp(forward_project(img, default_geometry(g, 360)), g);
  // interior mean, away from the edge
  double sum = 0;
  int n = 0;
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i)
      if (std::hypot(g.x_center(i), g.y_center(j)) < 0.4) {
        sum += rec.values(j, i);
        ++n;
      }
  CHECK(std::abs(sum / n - mu) <= 0.02 * mu);
  // outside the support stays near zero
  CHECK(std::abs(rec.values(2, 2)) < 0.05);
}

TEST_CASE("fbp: sparse views are weighted by the kept count") {
  const int size = 64;
  const Image img = disk(size, 0.5, 1.0);
  const auto g = img.grid();
  const auto full = forward_project(img, default_geometry(g, 240));
  const auto mask = ViewMask::from_stride(240, 4);
  const auto sparse = fbp(subsample(full, mask), g);
  // same as running the full-view FBP on a geometry holding only the kept views
  auto small_geom = default_geometry(g, 60);
  Sinogram compact(small_geom);
  for (int v = 0; v < 60; ++v) compact.values.row(v) = full.values.row(4 * v);
  const auto ref = fbp(compact, g);
  CHECK((sparse.values - ref.values).cwiseAbs().maxCoeff() <= 1e-10);
}
