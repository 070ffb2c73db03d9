#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>

#include "emp/summation.hpp"

using namespace emp;
using namespace emp::summation;

namespace {

// sum_{n=N+1}^{N+M} term(n), M large enough that the rest is negligible
template <class F>
long double brute_tail(F&& term, long N, long M) {
  long double s = 0.0L;
  for (long n = N + M; n > N; --n) s += term(static_cast<long double>(n));
  return s;
}

}  // namespace

TEST(NeumaierSum, RecoversCancelledMass) {
  NeumaierSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  EXPECT_EQ(s.value(), 2.0);
}

TEST(TailEstimate, FromBounds) {
  const TailEstimate t = TailEstimate::from_bounds(1.0, 3.0);
  EXPECT_EQ(t.center, 2.0);
  EXPECT_EQ(t.radius, 1.0);
  EXPECT_EQ(t.upper(), 3.0);
  EXPECT_EQ(t.lower(), 1.0);
}

TEST(IncompleteGamma, MatchesQuadrature) {
  for (double a : {-2.5, -2.0, -1.0, -0.5, 0.0, 0.5, 3.0}) {
    for (double z : {0.3, 1.0, 4.0}) {
      // int_z^inf t^{a-1} e^{-t} dt by exp-sinh quadrature
      boost::math::quadrature::exp_sinh<double> q;
      const double acc = q.integrate([a](double t) { return std::pow(t, a - 1.0) * std::exp(-t); }, z, std::numeric_limits<double>::infinity());
      EXPECT_NEAR(upper_incomplete_gamma(a, z), acc, 1e-8 * acc)
          << "a=" << a << " z=" << z;
    }
  }
}

TEST(EulerMaclaurin, GeometricLikeTail) {
  // G(n) = n^2 e^{-0.01 n}
  ExpPowerFunction g{-0.01, {{1.0, 2.0}}};
  const long N = 50;
  auto est = euler_maclaurin_exp_power(g, 0.0, N);
  ASSERT_TRUE(est.has_value());
  const long double exact = brute_tail([](long double n) { return n * n * std::exp(-0.01L * n); }, N, 20000);
  EXPECT_LE(std::fabs(est->center - static_cast<double>(exact)), est->radius + 1e-12 * exact);
  EXPECT_LT(est->radius, 1e-8 * exact);
}

TEST(EulerMaclaurin, SignChangingFourthDerivativeStillEncloses) {
  // G(n) = n e^{-t n} with tiny t: G'''' changes sign near n = 4/t
  ExpPowerFunction g{-1e-3, {{1.0, 1.0}}};
  const long N = 32;
  auto est = euler_maclaurin_exp_power(g, 0.0, N);
  ASSERT_TRUE(est.has_value());
  const long double exact = brute_tail([](long double n) { return n * std::exp(-1e-3L * n); }, N, 80000);
  EXPECT_LE(std::fabs(est->center - static_cast<double>(exact)), est->radius + 1e-12 * exact);
  EXPECT_LT(est->radius, 1e-10 * exact);
}

TEST(EulerMaclaurin, PowerTailAtZeroExponent) {
  // sum_{n > N} n^{-3}
  ExpPowerFunction g{0.0, {{1.0, -3.0}}};
  const long N = 100;
  auto est = euler_maclaurin_exp_power(g, 0.0, N);
  ASSERT_TRUE(est.has_value());
  const long double exact = brute_tail([](long double n) { return 1.0L / (n * n * n); }, N, 3000000);
  const long double rest = 1.0L / (2.0L * 3000100.0L * 3000100.0L);
  EXPECT_NEAR(est->center, static_cast<double>(exact + rest), est->radius + 1e-16);
  EXPECT_FALSE(euler_maclaurin_exp_power(ExpPowerFunction{0.0, {{1.0, -1.0}}}, 0.0, N).has_value());
  EXPECT_FALSE(euler_maclaurin_exp_power(ExpPowerFunction{0.5, {{1.0, 0.0}}}, 0.0, N).has_value());
}

TEST(EulerMaclaurin, LogPowerTail) {
  // sum_{z > Z} z^{-2} ln z
  LogPowerFunction g{2.0, {0.0, 1.0}};
  const double Z = 50.0;
  auto est = euler_maclaurin_log_power(g, 0.0, Z);
  ASSERT_TRUE(est.has_value());
  const long M = 4000000;
  const long double part = brute_tail([](long double z) { return std::log(z) / (z * z); }, 50, M);
  const long double Zm = 50.0L + M;
  const long double rest = (std::log(Zm) + 1.0L) / Zm;  // integral of the remainder, leading order
  EXPECT_NEAR(est->center, static_cast<double>(part + rest), 1e-12 + est->radius);
  EXPECT_FALSE(euler_maclaurin_log_power(LogPowerFunction{1.0, {1.0}}, 0.0, Z).has_value());
}

TEST(RatioTail, BoundsGeometricSeries) {
  // a_n = 2^{-n}, N = 10: exact tail 2^{-10}
  const auto t = ratio_tail(-10 * std::log(2.0), -11 * std::log(2.0), 0.5);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(t->upper(), std::ldexp(1.0, -10), 1e-18);
  EXPECT_LE(t->lower(), std::ldexp(1.0, -10));
  EXPECT_FALSE(ratio_tail(0.0, 0.0, 1.0).has_value());
}
