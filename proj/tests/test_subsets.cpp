#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "osmm/subsets.hpp"
#include "osmm/tomo.hpp"

using namespace osmm;

namespace {

Sinogram random_sinogram(int views, int bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Sinogram x(SinogramGeometry{views, bins, 0.5, 0.0});
  for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values.data()[i] = n(rng);
  return x;
}

bool bitwise_equal(const Array2& a, const Array2& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST_CASE("subset_indices: round-robin examples") {
  const auto two = subset_indices(6, 2);
  CHECK(two.indices(1) == std::vector<int>{1, 3, 5});
  CHECK(two.indices(2) == std::vector<int>{2, 4, 6});
  const auto three = subset_indices(6, 3);
  CHECK(three.indices(1) == std::vector<int>{1, 4});
  CHECK(three.indices(2) == std::vector<int>{2, 5});
  CHECK(three.indices(3) == std::vector<int>{3, 6});
  const auto one = subset_indices(6, 1);
  CHECK(one.indices(1) == std::vector<int>{1, 2, 3, 4, 5, 6});
  CHECK(two.subset_of(5) == 1);
  CHECK(three.subset_of(6) == 3);
  CHECK(three.parent_row(2, 1) == 4);
}

TEST_CASE("subset_indices: invalid counts") {
  CHECK_THROWS_AS(subset_indices(6, 4), ConfigError);
  CHECK_THROWS_AS(subset_indices(6, 0), ConfigError);
  CHECK_THROWS_AS(subset_indices(720, 7), ConfigError);
  CHECK_THROWS_AS(subset_indices(6, 2).indices(3), std::out_of_range);
}

TEST_CASE("subset_indices: partition for every N <= 16 dividing M") {
  for (int m : {720, 48, 30}) {
    for (int n = 1; n <= 16; ++n) {
      if (m % n) continue;
      const auto map = subset_indices(m, n);
      std::set<int> seen;
      std::size_t total = 0;
      for (int k = 1; k <= n; ++k) {
        const auto& idx = map.indices(k);
        CHECK(int(idx.size()) == m / n);
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        for (int v : idx) CHECK(map.subset_of(v) == k);
        seen.insert(idx.begin(), idx.end());
        total += idx.size();
      }
      CHECK(total == std::size_t(m));
      CHECK(seen.size() == std::size_t(m));
      CHECK(*seen.begin() == 1);
      CHECK(*seen.rbegin() == m);
    }
  }
}

TEST_CASE("os_split: N=1 is the identity") {
  const auto x = random_sinogram(12, 5, 1);
  const auto parts = os_split(x, 1);
  REQUIRE(parts.size() == 1);
  CHECK(bitwise_equal(parts[0].values, x.values));
}

TEST_CASE("os_split: 720 views into two halves") {
  const auto x = random_sinogram(720, 4, 2);
  const auto parts = os_split(x, 2);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].values.rows() == 360);
  CHECK(parts[1].values.rows() == 360);
  // subset 2 row 0 is parent view 2 (1-based)
  CHECK((parts[1].values.row(0).array() == x.values.row(1).array()).all());
  CHECK(parts[1].parent_views.front() == 2);
  // multiset of rows is preserved
  std::multiset<std::vector<double>> a, b;
  for (int v = 0; v < 720; ++v) a.insert(std::vector<double>(x.values.row(v).begin(), x.values.row(v).end()));
  for (const auto& p : parts)
    for (int k = 0; k < 360; ++k) b.insert(std::vector<double>(p.values.row(k).begin(), p.values.row(k).end()));
  CHECK(a == b);
}

TEST_CASE("os_merge: exact inverse of os_split") {
  const auto x = random_sinogram(720, 7, 3);
  for (int n : {1, 2, 3, 4}) {
    const auto merged = os_merge(os_split(x, n));
    CHECK(merged.geometry == x.geometry);
    CHECK(bitwise_equal(merged.values, x.values));
    const SubsetIndexMap map(720, n);
    CHECK(bitwise_equal(os_merge(os_split(x.values, map), map), x.values));
  }
}

TEST_CASE("os_merge: order-insensitive") {
  const auto x = random_sinogram(24, 3, 4);
  auto parts = os_split(x, 4);
  std::reverse(parts.begin(), parts.end());
  std::swap(parts[0], parts[2]);
  CHECK(bitwise_equal(os_merge(parts).values, x.values));
}

TEST_CASE("os_merge: constant subsets interleave round-robin") {
  const int m = 12, n = 3;
  const SinogramGeometry geom{m, 2, 1.0, 0.0};
  const SubsetIndexMap map(m, n);
  std::vector<SubsetSinogram> parts;
  for (int k = 1; k <= n; ++k)
    parts.push_back({geom, k, n, map.indices(k), Array2::Constant(m / n, 2, double(k))});
  const auto merged = os_merge(parts);
  for (int v = 1; v <= m; ++v) CHECK(merged.values(v - 1, 0) == double((v - 1) % n + 1));
}

TEST_CASE("os_merge: missing, duplicate and foreign parts are rejected") {
  const auto x = random_sinogram(12, 3, 5);
  auto parts = os_split(x, 3);
  auto missing = parts;
  missing.pop_back();
  CHECK_THROWS_AS(os_merge(missing), ShapeError);
  auto dup = parts;
  dup[2] = dup[0];
  CHECK_THROWS_AS(os_merge(dup), ShapeError);
  auto foreign = parts;
  foreign[1].parent.num_detectors = 4;
  CHECK_THROWS_AS(os_merge(foreign), ShapeError);
  CHECK_THROWS_AS(os_merge(std::vector<SubsetSinogram>{}), ShapeError);
}

TEST_CASE("mask_for_subset: full, stride 12 and stride 9") {
  const SubsetIndexMap map(720, 2);
  const auto full = mask_for_subset(ViewMask::full(720), map, 2);
  CHECK(full.size() == 360);
  CHECK(full.count() == 360);

  const auto s12 = ViewMask::from_stride(720, 12);
  CHECK(measured_per_subset(s12, map) == std::vector<int>{60, 0});
  const auto s9 = ViewMask::from_stride(720, 9);
  CHECK(measured_per_subset(s9, map) == std::vector<int>{40, 40});
  const auto m1 = mask_for_subset(s9, map, 1);
  for (int k = 0; k < 360; ++k) CHECK(m1[k] == s9[map.parent_row(1, k)]);
}

TEST_CASE("subsample then split equals split then per-subset mask") {
  const auto x = random_sinogram(60, 5, 6);
  const auto mask = ViewMask::from_stride(60, 4);
  for (int n : {1, 2, 3, 4, 5}) {
    const SubsetIndexMap map(60, n);
    const auto a = os_split(subsample(x, mask).data.values, map);
    const auto b = os_split(x.values, map);
    for (int k = 1; k <= n; ++k) {
      const auto sm = mask_for_subset(mask, map, k);
      Array2 masked = b[std::size_t(k - 1)];
      for (int r = 0; r < sm.size(); ++r)
        if (!sm[r]) masked.row(r).setZero();
      CHECK(bitwise_equal(a[std::size_t(k - 1)], masked));
    }
  }
}
