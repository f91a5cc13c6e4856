#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace ttx {

using Rng = std::mt19937_64;

// splitmix64 finalizer. Used to derive independent substream seeds from
// (master seed, index...) so results do not depend on scheduling or thread
// count: every work item owns an rng seeded purely by its indices.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ (mix_seed(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

inline double uniform_real(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

inline double gaussian(Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> d(0.0, sigma);
  return d(rng);
}

inline Eigen::Vector3d gaussian3(Rng& rng, double sigma = 1.0) {
  return {gaussian(rng, sigma), gaussian(rng, sigma), gaussian(rng, sigma)};
}

// Uniformly distributed direction on the unit sphere.
inline Eigen::Vector3d random_unit_vector(Rng& rng) {
  while (true) {
    Eigen::Vector3d v = gaussian3(rng);
    double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

// Draw k distinct indices from [0, n). Partial Fisher-Yates; deterministic
// for a given rng state.
inline std::vector<int> sample_distinct(Rng& rng, int n, int k) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> d(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(d(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace ttx
