#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "difflab/rng.hpp"
#include "difflab/stats.hpp"

using namespace difflab;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}),
            (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, AddressableAndDeterministic) {
  const CounterRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  EXPECT_EQ(a.uniform(5, 3, 1), b.uniform(5, 3, 1));
  EXPECT_NE(a.uniform(5, 3, 1), c.uniform(5, 3, 1));
  EXPECT_NE(a.uniform(5, 3, 1), d.uniform(5, 3, 1));
  EXPECT_NE(a.uniform(5, 3, 1), a.uniform(6, 3, 1));
  EXPECT_NE(a.uniform(5, 3, 1), a.uniform(5, 4, 1));
}

TEST(CounterRng, UniformsInOpenInterval) {
  const CounterRng r(1, 0);
  for (std::uint64_t p = 0; p < 10000; ++p) {
    const double u = r.uniform(p, 0, 0);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(CounterRng, NormalsPassKsAndMoments) {
  const CounterRng r(2024, 1);
  std::vector<double> xs;
  xs.reserve(200000);
  double buf[3];
  for (std::uint64_t p = 0; p < 200000 / 3; ++p) {
    r.normals(p, 0, 0, buf);
    xs.insert(xs.end(), buf, buf + 3);
  }
  const auto ms = mean_se(xs);
  EXPECT_LT(std::abs(ms.mean), 4.0 * ms.std_error);
  double m2 = 0.0;
  for (double x : xs) m2 += x * x;
  m2 /= xs.size();
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / xs.size()));
  const auto ks = ks_one_sample(xs, normal_cdf);
  EXPECT_GT(ks.p_value, 1e-3);
}

TEST(DeriveSeed, NamedStreamsAreIndependentOfOrder) {
  EXPECT_EQ(derive_seed(1, "harnack"), derive_seed(1, "harnack"));
  EXPECT_NE(derive_seed(1, "harnack"), derive_seed(1, "thm11"));
  EXPECT_NE(derive_seed(1, "harnack"), derive_seed(2, "harnack"));
}
