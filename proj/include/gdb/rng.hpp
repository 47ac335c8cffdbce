#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "gdb/types.hpp"

namespace gdb {

/// Seeded random stream with cheap derivation of independent substreams.
///
/// Streams derived from distinct (seed, stream-id) pairs are statistically
/// independent; the same seed always reproduces the same draw sequence.
/// Normal variates use an explicit Box-Muller transform so the byte-level
/// output depends only on the seed, not on the standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// A new independent stream keyed by `stream`; does not disturb this one.
  Rng derive(std::uint64_t stream) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal.
  double normal();

  /// Fills an n x 3 block with i.i.d. standard normals, row by row.
  void fill_normal(Eigen::Ref<Coords> out);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gdb
