#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dsplit/rng.hpp"

using namespace dsplit;

TEST(Rng, SubstreamsAreDeterministic) {
  RngStream s{42, 7};
  RngEngine a = s.at(3, 5);
  RngEngine b = s.at(3, 5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SubstreamsDifferByPathAndInterval) {
  RngStream s{42, 7};
  RngEngine base = s.at(3, 5);
  RngEngine other_path = s.at(4, 5);
  RngEngine other_iv = s.at(3, 6);
  RngEngine other_stream = s.child(1).at(3, 5);
  const std::uint64_t v = base.next_u64();
  EXPECT_NE(v, other_path.next_u64());
  EXPECT_NE(v, other_iv.next_u64());
  EXPECT_NE(v, other_stream.next_u64());
}

TEST(Rng, SubstreamsIndependentOfDrawOrder) {
  // Engine for (path, interval) depends only on the key, not on what other
  // engines were created or used before it.
  RngStream s{9, 1};
  RngEngine first = s.at(0, 0);
  (void)first.next_u64();
  RngEngine later = s.at(11, 22);
  RngEngine fresh = RngStream{9, 1}.at(11, 22);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(later.next_u64(), fresh.next_u64());
}

TEST(Rng, UniformInOpenUnitInterval) {
  RngEngine eng = RngStream{1, 0}.engine();
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = eng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  const double se = std::sqrt(1.0 / 12.0 / n);
  EXPECT_NEAR(sum / n, 0.5, 3 * se);
}

TEST(Rng, NormalMoments) {
  RngEngine eng = RngStream{2, 0}.engine();
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = eng.normal();
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 3.0 / std::sqrt(n));
  EXPECT_NEAR(sum2 / n, 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(sum4 / n, 3.0, 3.0 * std::sqrt(96.0 / n));
}

TEST(Rng, PoissonMoments) {
  RngEngine eng = RngStream{3, 0}.engine();
  for (double lam : {0.7, 5.0, 50.0}) {  // 50 exercises the halving branch
    const int n = 60000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(eng.poisson(lam));
      sum += k;
      sum2 += k * k;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    EXPECT_NEAR(mean, lam, 3 * std::sqrt(lam / n)) << "lambda=" << lam;
    EXPECT_NEAR(var, lam, 6 * lam / std::sqrt(n)) << "lambda=" << lam;
  }
  EXPECT_EQ(eng.poisson(0.0), 0);
  EXPECT_THROW(eng.poisson(-1.0), std::invalid_argument);
}

TEST(Rng, GammaMoments) {
  // Paper-style marks: shape 0.4 (boost branch), rate 4.
  RngEngine eng = RngStream{4, 0}.engine();
  const double alpha = 0.4, beta = 4.0;
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = eng.gamma(alpha, beta);
    ASSERT_GT(g, 0.0);
    sum += g;
    sum2 += g * g;
  }
  const double m1 = alpha / beta;
  const double m2 = alpha * (alpha + 1) / (beta * beta);
  const double var_m1 = (m2 - m1 * m1) / n;
  EXPECT_NEAR(sum / n, m1, 3 * std::sqrt(var_m1));
  // fourth moment alpha(alpha+1)(alpha+2)(alpha+3)/beta^4 bounds the m2 SE
  const double m4 = alpha * (alpha + 1) * (alpha + 2) * (alpha + 3) / std::pow(beta, 4);
  EXPECT_NEAR(sum2 / n, m2, 3 * std::sqrt((m4 - m2 * m2) / n));
  EXPECT_THROW(eng.gamma(-0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(eng.gamma(0.5, 0.0), std::invalid_argument);
}

TEST(Rng, GammaShapeAboveOne) {
  RngEngine eng = RngStream{5, 0}.engine();
  const double alpha = 2.5, beta = 1.5;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += eng.gamma(alpha, beta);
  const double sd = std::sqrt(alpha) / beta;
  EXPECT_NEAR(sum / n, alpha / beta, 3 * sd / std::sqrt(n));
}

TEST(Rng, ChildStreamsAreStable) {
  RngStream s{123, 0};
  EXPECT_EQ(s.child(5).stream, s.child(5).stream);
  EXPECT_NE(s.child(5).stream, s.child(6).stream);
  EXPECT_NE(s.child(5).child(1).stream, s.child(5).child(2).stream);
}
