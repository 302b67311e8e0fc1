#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "concord/errors.hpp"
#include "concord/random.hpp"

using namespace concord;

TEST(Rng, DeterministicBySeed) {
  Rng a(42), b(42), c(43);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    (void)c.next_u64();
  }
  EXPECT_NE(Rng(42).next_u64(), Rng(43).next_u64());
  EXPECT_NE(Rng(42, 1).next_u64(), Rng(42, 2).next_u64());
  EXPECT_EQ(Rng(42, 7).next_u64(), Rng(derive_seed(42, 7)).next_u64());
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(1);
  double sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(double(n)));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(Rng, UniformIndexIsUnbiased) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int k = 0; k < n; ++k) ++counts[rng.uniform_index(7)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 22.46);  // chi-square(6) 0.999 quantile
  EXPECT_THROW(rng.uniform_index(0), InvalidArgument);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(4);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < 100; ++k) EXPECT_EQ(sorted[k], k);
  std::vector<int> identity(100);
  std::iota(identity.begin(), identity.end(), 0);
  EXPECT_NE(v, identity);
}

TEST(Reservoir, KeepsAllWhenCountExceedsStream) {
  Rng rng(5);
  ReservoirSampler<int> s(10, rng);
  for (int k = 0; k < 4; ++k) s.offer(k * 10);
  const auto out = s.take();
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(out[k].first, k);
}

TEST(Reservoir, InclusionIsUniformOverSeeds) {
  // Every item of a 20-item stream should land in a 5-item sample with
  // probability 1/4 over 10^4 seeds.
  const int n = 20, count = 5, seeds = 10000;
  std::vector<int> hits(n, 0);
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    for (auto idx : sample_indices(n, count, rng)) ++hits[idx];
  }
  const double p = double(count) / n, expected = p * seeds;
  const double sd = std::sqrt(seeds * p * (1 - p));
  for (int k = 0; k < n; ++k) EXPECT_NEAR(hits[k], expected, 4.5 * sd) << "item " << k;
}

TEST(Reservoir, SampleIndicesSortedDistinct) {
  Rng rng(6);
  const auto idx = sample_indices(1000, 100, rng);
  ASSERT_EQ(idx.size(), 100u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 100u);
  EXPECT_THROW(sample_indices(5, 6, rng), InvalidArgument);
}
