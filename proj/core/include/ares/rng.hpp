#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace ares {

/// Seeded pseudo-random generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. All conversions to uniform/normal/gamma variates are done here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined.
///
/// Child streams are derived from the stream's seed and a label only, so a
/// child is the same no matter how many values were drawn from the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  Rng child(std::string_view label) const;
  Rng child(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Standard normal variate (Box-Muller, no cached spare).
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace ares
