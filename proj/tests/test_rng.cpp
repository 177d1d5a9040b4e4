#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "tsg/rng.hpp"

using namespace tsg;

TEST(Rng, MixMatchesSplitMix64Reference) {
  // Reference SplitMix64 started from state 0 (Vigna's splitmix64.c).
  RandomStream s(0);
  EXPECT_EQ(s(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(s(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(s(), 0x06C45D188009454FULL);
}

TEST(Rng, StreamsAreReproducible) {
  RandomStream a(42, 7, Purpose::kEstimation);
  RandomStream b(42, 7, Purpose::kEstimation);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, AtMatchesSequentialDraws) {
  RandomStream a(5, 1, Purpose::kTest, 3);
  const RandomStream b = a;
  for (std::uint64_t i = 0; i < 100; ++i) ASSERT_EQ(a(), b.at(i));
  EXPECT_EQ(a.counter(), 100u);
}

TEST(Rng, DistinctPurposesItemsSubstreamsAndSeeds) {
  std::set<std::uint64_t> keys;
  // Small integers in every slot: the classic way for chained hashing to
  // collide is swapping equal values between slots.
  for (std::uint64_t seed = 0; seed < 8; ++seed)
    for (std::uint64_t item = 0; item < 8; ++item)
      for (Purpose p : {Purpose::kEstimation, Purpose::kEvaluation, Purpose::kCelf, Purpose::kTest})
        for (std::uint64_t sub = 0; sub < 8; ++sub) keys.insert(stream_key(seed, item, p, sub));
  EXPECT_EQ(keys.size(), 8u * 8u * 4u * 8u);
}

TEST(Rng, DeriveSeedSeparatesArguments) {
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  EXPECT_EQ(derive_seed(9, 8, 7), derive_seed(9, 8, 7));
}

TEST(Rng, UniformRangeAndMean) {
  RandomStream s(11, 0, Purpose::kVerify);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // SE of the mean is sqrt(1/12 / n) ~ 6.5e-4.
  EXPECT_NEAR(sum / n, 0.5, 4 * 6.5e-4);
}

TEST(Rng, BelowIsUniformOverSmallRange) {
  RandomStream s(3, 0, Purpose::kVerify);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = s.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  // 6 degrees of freedom; the 0.999 quantile is 22.46.
  EXPECT_LT(chi2, 22.46);
  EXPECT_EQ(s.below(1), 0u);
}
