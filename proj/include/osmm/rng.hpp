#pragma once

#include <cstdint>
#include <random>

#include "osmm/types.hpp"

namespace osmm {

using Rng = std::mt19937_64;

/// Independent stream `stream` of a run seeded with `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32),
                    0x6f736d6du};
  return Rng(seq);
}

/// Array of i.i.d. standard normals, drawn in row-major order.
inline Array2 standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Array2 z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  return z;
}

}  // namespace osmm
