#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace stgeo {

// Mixes a base seed with a stream index so that every run of a batch
// experiment owns an independent generator state. SplitMix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seedable uniform(0,1) generator backed by std::mt19937_64.
///
/// The double mapping is spelled out explicitly (53 top bits of the raw
/// output) so that a given seed yields the same stream on every platform.
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed) : gen_(seed) {}

  /// Generator for run number `stream` of a batch seeded with `seed`.
  static UniformRng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return UniformRng(mix_seed(seed, stream));
  }

  /// Uniform double in [0,1).
  double next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// r x c matrix with independent uniform(0,1) entries, filled column by
  /// column.
  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = next();
    return m;
  }

  /// Same as matrix() but with entries in (-1,1).
  Eigen::MatrixXd signed_matrix(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = 2.0 * next() - 1.0;
    return m;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stgeo
