#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "bubbleopt/rng.hpp"

using namespace bubbleopt;

// Known-answer vectors for Philox4x32-10 published with Random123.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::encrypt({0u, 0u, 0u, 0u}, {0u, 0u});
  EXPECT_EQ(out, (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::encrypt({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint32_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
}

TEST(Philox, FirstBlockIsEncryptedCounter) {
  Philox4x32 g(0x0000000200000001ull, 0x0000000400000003ull);
  const auto expect = Philox4x32::encrypt({0u, 0u, 3u, 4u}, {1u, 2u});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(g(), expect[i]);
  const auto second = Philox4x32::encrypt({1u, 0u, 3u, 4u}, {1u, 2u});
  EXPECT_EQ(g(), second[0]);
}

TEST(Philox, NormalMoments) {
  Philox4x32 g(1, 0);
  boost::random::normal_distribution<double> normal;
  const int n = 400000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = normal(g);
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}
