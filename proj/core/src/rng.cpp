#include "mcn/rng.hpp"

#include <cmath>
#include <numbers>

namespace mcn {

Rng::Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  // Top 53 bits give every representable double in [0, 1) equal weight.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  const auto range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return lo + static_cast<int>(next_u64() % range);
}

std::size_t Rng::index(std::size_t size) {
  return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(size));
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = uniform();
  while (u <= 0.0) u = uniform();
  const double v = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u));
  const double angle = 2.0 * std::numbers::pi * v;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

Rng Rng::fork(std::uint64_t stream) const {
  // Mix the stream id into the base seed; splitmix64 scrambling keeps
  // adjacent stream ids statistically unrelated.
  std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return Rng(z);
}

}  // namespace mcn
