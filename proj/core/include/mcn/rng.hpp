#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mcn {

/// Deterministic random source. Distributions are derived from raw
/// mt19937_64 output by hand; std::*_distribution is implementation-defined
/// and would break bitwise reproducibility of checkpoints across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Inclusive on both ends.
  int uniform_int(int lo, int hi);
  std::size_t index(std::size_t size);

  /// Standard normal via Box-Muller (spare value cached).
  double gaussian();
  double gaussian(double mean, double stddev);

  /// Derive an independent stream; the parent state is untouched.
  Rng fork(std::uint64_t stream) const;

  template <class T>
  void shuffle(std::vector<T>& items) {
    if (items.empty()) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      const std::size_t j = index(i + 1);
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mcn
