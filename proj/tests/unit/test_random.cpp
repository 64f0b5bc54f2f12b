#include <gtest/gtest.h>

#include <set>

#include "etcbench/random.hpp"

using namespace etcbench;

TEST(KeyStream, DeterministicPerSeedAndStream) {
  Seed256 seed{};
  seed[0] = 7;
  KeyStream a(seed, 1), b(seed, 1), c(seed, 2);
  bool differs = false;
  for (int i = 0; i < 50; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs = differs || x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(KeyStream, BelowStaysInRangeAndCoversIt) {
  Seed256 seed{};
  KeyStream ks(seed, 3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = ks.below(6);
    ASSERT_LT(v, 6u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_EQ(ks.below(1), 0u);
}

TEST(Seed, HexRoundTripAndValidation) {
  Rng rng(5);
  const Seed256 s = rng.seed256();
  EXPECT_EQ(seed_from_hex(to_hex(s)), s);
  EXPECT_EQ(to_hex(s).size(), 64u);
  EXPECT_THROW(seed_from_hex("abc"), std::invalid_argument);
  EXPECT_THROW(seed_from_hex(std::string(64, 'g')), std::invalid_argument);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(99);
  double su = 0, sn = 0, sn2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.01);
  EXPECT_NEAR(sn / n, 0.0, 0.02);
  EXPECT_NEAR(sn2 / n, 1.0, 0.03);
}

TEST(Rng, DeriveSeedSeparatesLabels) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(3, 4), derive_seed(3, 4));
}
