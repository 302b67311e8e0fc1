#include "concord/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "concord/errors.hpp"

namespace concord {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("uniform_index bound must be positive");
  // Rejection on the top of the range keeps every residue equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open_left();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  if (count > n)
    throw InvalidArgument("cannot sample " + std::to_string(count) + " of " + std::to_string(n) +
                          " items");
  ReservoirSampler<std::size_t> sampler(count, rng);
  for (std::size_t k = 0; k < n; ++k) sampler.offer(k);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (auto& [pos, value] : sampler.take()) out.push_back(value);
  return out;
}

}  // namespace concord
