#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dmr/rng.h"

namespace dmr {
namespace {

using Block = std::array<std::uint32_t, 4>;

// Known-answer vectors published with the Random123 library.
TEST(Philox, KnownAnswerZero) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, DeterministicAndOrderFree) {
  const RngStream a(7, 3), b(7, 3);
  std::array<double, 3> fwd{}, again{};
  a.normals(100, fwd);
  b.normals(5, again);
  b.normals(100, again);
  EXPECT_EQ(fwd, again);
  for (std::uint32_t k = 0; k < 3; ++k) EXPECT_EQ(a.normal(100, k), fwd[k]);
}

TEST(RngStream, StreamsDiffer) {
  EXPECT_NE(RngStream(7, 3).normal(0, 0), RngStream(7, 4).normal(0, 0));
  EXPECT_NE(RngStream(7, 3).normal(0, 0), RngStream(8, 3).normal(0, 0));
  EXPECT_NE(RngStream(7, 3).normal(0, 0), RngStream(7, 3).normal(1, 0));
  EXPECT_NE(RngStream(7, 3).normal(0, 0), RngStream(7, 3).normal(0, 2));
  EXPECT_NE(RngStream(7, std::uint64_t{1} << 32).normal(0, 0), RngStream(7, 0).normal(0, 0));
}

TEST(RngStream, UniformsInsideOpenInterval) {
  const RngStream s(1, 0);
  for (std::uint64_t n = 0; n < 10000; ++n) {
    const auto u = s.uniforms(n, 0);
    EXPECT_GT(u[0], 0.0);
    EXPECT_LT(u[0], 1.0);
    EXPECT_GT(u[1], 0.0);
    EXPECT_LT(u[1], 1.0);
  }
}

TEST(RngStream, NormalMoments) {
  const std::size_t n = 200000;
  double m1 = 0.0, m2 = 0.0, m4 = 0.0, cross = 0.0;
  std::array<double, 3> z{};
  for (std::size_t i = 0; i < n; ++i) {
    RngStream(11, i % 97).normals(i, z);
    m1 += z[2];
    m2 += z[2] * z[2];
    m4 += std::pow(z[2], 4);
    cross += z[0] * z[2];
  }
  const double dn = static_cast<double>(n);
  EXPECT_NEAR(m1 / dn, 0.0, 5.0 / std::sqrt(dn));
  EXPECT_NEAR(m2 / dn, 1.0, 5.0 * std::sqrt(2.0 / dn));
  EXPECT_NEAR(m4 / dn, 3.0, 5.0 * std::sqrt(96.0 / dn));
  EXPECT_NEAR(cross / dn, 0.0, 5.0 / std::sqrt(dn));
}

TEST(RngStream, StandardNormalCdfAtFixedPoints) {
  const std::size_t n = 100000;
  const double pts[] = {-1.5, -0.5, 0.0, 0.5, 1.5};
  std::vector<double> counts(5, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = RngStream(3, i).normal(0, 1);
    for (int k = 0; k < 5; ++k) counts[k] += z <= pts[k];
  }
  for (int k = 0; k < 5; ++k) {
    const double expected = 0.5 * std::erfc(-pts[k] / std::sqrt(2.0));
    EXPECT_NEAR(counts[k] / n, expected, 5.0 * std::sqrt(0.25 / n));
  }
}

}  // namespace
}  // namespace dmr
