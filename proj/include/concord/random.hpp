#pragma once

// Seedable, platform-independent random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniform doubles, bounded integers, Gaussian variates (Box-Muller)
// and shuffles are implemented here instead of using the <random>
// distributions, whose algorithms are implementation-defined.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace concord {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for substream `stream` of `seed`; distinct streams are decorrelated.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : Rng(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on (0, 1]; safe to take log of.
  double uniform_open_left() { return 1.0 - uniform(); }

  /// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Standard normal via Box-Muller; variates are produced in pairs and the
  /// second is cached.
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t k = values.size(); k > 1; --k) {
      const auto j = static_cast<std::size_t>(uniform_index(k));
      std::swap(values[k - 1], values[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Single-pass uniform sample of `count` items without replacement
/// (Algorithm R). Feed items in stream order; `take()` returns the kept
/// items paired with their stream positions, sorted by position.
template <typename T>
class ReservoirSampler {
 public:
  ReservoirSampler(std::size_t count, Rng& rng) : count_(count), rng_(&rng) { items_.reserve(count); }

  void offer(T item) {
    if (items_.size() < count_) {
      items_.emplace_back(seen_, std::move(item));
    } else if (count_ > 0) {
      const auto j = static_cast<std::size_t>(rng_->uniform_index(seen_ + 1));
      if (j < count_) items_[j] = {seen_, std::move(item)};
    }
    ++seen_;
  }

  std::size_t seen() const noexcept { return seen_; }

  std::vector<std::pair<std::size_t, T>> take();

 private:
  std::size_t count_;
  Rng* rng_;
  std::size_t seen_ = 0;
  std::vector<std::pair<std::size_t, T>> items_;
};

template <typename T>
std::vector<std::pair<std::size_t, T>> ReservoirSampler<T>::take() {
  auto out = std::move(items_);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  items_.clear();
  return out;
}

/// `count` distinct indices from [0, n), sorted ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng);

}  // namespace concord
