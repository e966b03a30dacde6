// SPDX-License-Identifier: Apache-2.0
#include "poolnet/numerics.hpp"

#include <algorithm>
#include <limits>

namespace poolnet {

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ArgumentError("uniform_index: empty range");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % n;
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Array2 init_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  if (!(scale > 0.0)) throw ArgumentError("init_uniform: scale must be positive");
  if (rows < 0 || cols < 0) throw ShapeError("init_uniform: negative dimension");
  Array2 m(rows, cols);
  // Row-major fill order is part of the reproducibility contract.
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

Array1 init_uniform(Rng& rng, Eigen::Index len, double scale) {
  Array2 m = init_uniform(rng, len, 1, scale);
  return Eigen::Map<const Array1>(m.data(), len);
}

void set_zero(const std::vector<ParamView>& params) {
  for (const auto& p : params) std::fill(p.values.begin(), p.values.end(), 0.0);
}

}  // namespace poolnet
