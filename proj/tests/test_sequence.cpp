#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "emp/sequence.hpp"

using namespace emp;

namespace {

// Brute-force triple enumeration: level -> count, for a^2+b^2+c^2 <= L.
std::map<long, long> triples_up_to(long L) {
  std::map<long, long> m;
  for (long a = 1; a * a <= L; ++a)
    for (long b = 1; b * b <= L; ++b)
      for (long c = 1; c * c <= L; ++c) {
        const long k = a * a + b * b + c * c;
        if (k <= L) ++m[k];
      }
  return m;
}

}  // namespace

TEST(Generate, Examples) {
  EXPECT_EQ(SequenceFamily::geometric().generate(3), std::make_pair(1.0, 3.0));
  const auto [p1, s1] = SequenceFamily::weighted_geometric(1.0, 3.0).generate(1);
  EXPECT_NEAR(p1, std::exp(1.0), 1e-15);
  EXPECT_EQ(s1, 1.0);
  EXPECT_EQ(SequenceFamily::lattice3d(1.0).generate(1), std::make_pair(1.0, 3.0));
}

TEST(Generate, Deterministic) {
  const auto a = SequenceFamily::power_law(0.5, 1.5, 2.0, 0.1, 1.0);
  const auto b = SequenceFamily::power_law(0.5, 1.5, 2.0, 0.1, 1.0);
  EXPECT_TRUE(a == b);
  for (long n = 1; n < 500; n += 7) {
    EXPECT_EQ(a.generate(n), b.generate(n));
    EXPECT_EQ(a.generate(n), a.generate(n));
  }
  EXPECT_THROW(a.generate(0), PreconditionError);
}

TEST(Generate, RuleFamiliesMatchTheirFormulas) {
  const auto ar = SequenceFamily::arithmetic(2.0, 0.5, 3.0);
  EXPECT_DOUBLE_EQ(ar.sigma(4), 4.0);
  EXPECT_DOUBLE_EQ(ar.p(4), 3.0);
  const auto pl = SequenceFamily::power_law(2.0, 2.0, 1.0, 0.0, -1.0);
  EXPECT_DOUBLE_EQ(pl.sigma(3), 18.0);
  EXPECT_NEAR(pl.p(3), 3.0, 1e-14);
  const auto ll = SequenceFamily::log_levels(1.0);
  EXPECT_NEAR(ll.sigma(4), std::log(5.0), 1e-15);
  const auto ex = SequenceFamily::explicit_prefix({1, 1, 1}, {2, 2, 5}, TailRule{TailShape::Linear, 3.0, 1.0});
  EXPECT_EQ(ex.sigma(2), 2.0);
  EXPECT_EQ(ex.sigma(4), 7.0);
}

TEST(LatticeLevels, Examples) {
  const auto l3 = lattice_levels(1.0, 3);
  ASSERT_EQ(l3.size(), 3u);
  EXPECT_EQ(l3[0], (LatticeLevel{1, 3.0}));
  EXPECT_EQ(l3[1], (LatticeLevel{3, 6.0}));
  EXPECT_EQ(l3[2], (LatticeLevel{3, 9.0}));
  EXPECT_EQ(lattice_levels(1.0, 5)[4], (LatticeLevel{1, 12.0}));
  const auto l1 = lattice_levels(2.0, 1);
  ASSERT_EQ(l1.size(), 1u);
  EXPECT_EQ(l1[0], (LatticeLevel{1, 6.0}));
  EXPECT_THROW(lattice_levels(0.0, 3), ConfigurationError);
  EXPECT_THROW(lattice_levels(1.0, 0), ConfigurationError);
}

TEST(LatticeLevels, DegeneracyConservation) {
  const auto brute = triples_up_to(200);
  long brute_total = 0;
  for (const auto& [k, c] : brute) brute_total += c;
  long total = 0, n = 0;
  for (const LatticeLevel& l : lattice_levels(1.0, static_cast<long>(brute.size()) + 5)) {
    if (l.level > 200.0) break;
    ++n;
    ASSERT_EQ(brute.count(static_cast<long>(l.level)), 1u) << l.level;
    EXPECT_EQ(brute.at(static_cast<long>(l.level)), l.degeneracy);
    total += l.degeneracy;
  }
  EXPECT_EQ(n, static_cast<long>(brute.size()));
  EXPECT_EQ(total, brute_total);
}

TEST(LatticeLevels, FamilyAgreesWithLevelList) {
  const auto fam = SequenceFamily::lattice3d(0.5);
  const auto lv = lattice_levels(0.5, 300);
  for (long n = 1; n <= 300; ++n) {
    EXPECT_EQ(fam.sigma(n), lv[static_cast<std::size_t>(n - 1)].level);
    EXPECT_DOUBLE_EQ(fam.p(n), static_cast<double>(lv[static_cast<std::size_t>(n - 1)].degeneracy));
  }
}

TEST(PrefixStats, Examples) {
  const PrefixStats g = SequenceFamily::geometric().prefix_stats(4);
  EXPECT_EQ(g.rho_n, 4.0);
  EXPECT_EQ(g.eta1_n, 1.0);
  EXPECT_EQ(g.eta2_n, 4.0);
  const PrefixStats l = SequenceFamily::lattice3d(1.0).prefix_stats(2);
  EXPECT_EQ(l.rho_n, 4.0);
  EXPECT_EQ(l.eta1_n, 3.0);
  EXPECT_EQ(l.eta2_n, 6.0);
  const PrefixStats w = SequenceFamily::weighted_geometric(1.0, 3.0).prefix_stats(2);
  EXPECT_NEAR(w.rho_n, std::exp(1.0) + std::exp(2.0) / 8.0, 1e-14);
  EXPECT_NEAR(w.rho_n, 3.64192, 1e-5);
}

TEST(PrefixStats, Monotone) {
  const auto f = SequenceFamily::explicit_prefix({2, 1, 3}, {5, 1, 7}, TailRule{TailShape::Linear, 0.0, 2.0});
  PrefixStats prev = f.prefix_stats(1);
  for (long n = 2; n < 40; ++n) {
    const PrefixStats s = f.prefix_stats(n);
    EXPECT_GT(s.rho_n, prev.rho_n);
    EXPECT_LE(s.eta1_n, prev.eta1_n);
    EXPECT_GE(s.eta2_n, prev.eta2_n);
    prev = s;
  }
}

TEST(SigmaMinSet, Examples) {
  const SigmaMinSet g = SequenceFamily::geometric().sigma_min_set();
  EXPECT_EQ(g.theta1, 1.0);
  EXPECT_EQ(g.indices, std::vector<long>{1});
  EXPECT_EQ(g.p_sum, 1.0);

  TailRule tail{TailShape::Linear, 2.0, 1.0};  // sigma_n = 2 + n for n >= 3
  const SigmaMinSet e = SequenceFamily::explicit_prefix({1, 1}, {2, 2}, tail).sigma_min_set();
  EXPECT_EQ(e.theta1, 2.0);
  EXPECT_EQ(e.indices, (std::vector<long>{1, 2}));
  EXPECT_EQ(e.p_sum, 2.0);

  const SigmaMinSet l = SequenceFamily::lattice3d(1.0).sigma_min_set();
  EXPECT_EQ(l.theta1, 3.0);
  EXPECT_EQ(l.indices, std::vector<long>{1});
  EXPECT_EQ(l.p_sum, 1.0);
}

TEST(SigmaMinSet, TieToleranceIsRelative) {
  TailRule tail{TailShape::Linear, 2.0, 1.0};
  const auto f = SequenceFamily::explicit_prefix({1, 3}, {2.0, 2.0 + 1e-13}, tail);
  EXPECT_EQ(f.sigma_min_set().indices.size(), 2u);
  EXPECT_EQ(f.sigma_min_set(1e-15).indices.size(), 1u);
}

TEST(SigmaMinSet, DecreasingFamilyUnsupported) {
  EXPECT_THROW(SequenceFamily::arithmetic(0.0, -1.0).sigma_min_set(), UnsupportedFamilyError);
  EXPECT_THROW(SequenceFamily::arithmetic(5.0, 0.0).sigma_min_set(), UnsupportedFamilyError);
}

TEST(TailBound, GeometricExample) {
  const auto b = SequenceFamily::geometric().tail_bound(-std::log(2.0), 10);
  ASSERT_TRUE(b.has_value());
  EXPECT_LE(std::ldexp(1.0, -10), *b * (1 + 1e-14));
  EXPECT_NEAR(*b, std::ldexp(1.0, -10), 1e-15);
  const auto far = SequenceFamily::geometric().tail_bound(-std::log(2.0), 500);
  ASSERT_TRUE(far.has_value());
  EXPECT_LT(*far, 1e-150);
}

TEST(TailBound, WeightedGeometricAgainstBruteForce) {
  const auto f = SequenceFamily::weighted_geometric(1.0, 3.0);
  const auto b = f.tail_bound(-1.5, 20);
  ASSERT_TRUE(b.has_value());
  long double brute = 0.0L;
  for (long n = 1000000; n > 20; --n) brute += std::exp(-0.5L * n) / (static_cast<long double>(n) * n * n);
  EXPECT_GT(*b, 0.0);
  EXPECT_GE(*b, static_cast<double>(brute));
  EXPECT_LT(*b, 10.0 * static_cast<double>(brute));
}

TEST(TailBound, Soundness) {
  struct Case {
    SequenceFamily f;
    double y;
  };
  const Case cases[] = {
      {SequenceFamily::geometric(), -0.05},
      {SequenceFamily::arithmetic(1.0, 2.0, 3.0), -0.3},
      {SequenceFamily::power_law(1.0, 1.5, 1.0, 0.5, -2.0), -0.6},
      {SequenceFamily::weighted_geometric(1.0, 3.0), -1.01},
      {SequenceFamily::log_levels(1.0, 1.0, 0.5), -3.0},
  };
  for (const Case& c : cases) {
    for (long N : {5L, 40L, 300L}) {
      const auto b = c.f.tail_bound(c.y, N);
      if (!b) continue;
      long double brute = 0.0L;
      for (long n = N + 100000; n > N; --n) brute += std::exp(static_cast<long double>(c.f.log_p(n) + c.f.sigma(n) * c.y));
      EXPECT_LE(static_cast<double>(brute), *b * (1 + 1e-12)) << "N=" << N << " y=" << c.y;
    }
  }
}

TEST(MomentTail, EnclosesBruteForce) {
  const auto f = SequenceFamily::weighted_geometric(1.0, 3.0);
  for (int j = 0; j <= 2; ++j) {
    for (double y : {-1.0, -1.2, -3.0}) {
      const long N = 64;
      const auto t = f.moment_tail(j, y, N);
      if (y == -1.0 && j == 2) {
        EXPECT_FALSE(t.has_value());
        continue;
      }
      ASSERT_TRUE(t.has_value()) << j << " " << y;
      long double brute = 0.0L;
      const long M = 3000000;
      for (long n = N + M; n > N; --n)
        brute += std::pow(static_cast<long double>(n), j) * std::exp(static_cast<long double>(f.log_p(n) + n * y));
      if (y == -1.0) brute += std::pow(static_cast<long double>(N + M), j - 2) / (2 - j);  // integral of the rest
      EXPECT_LE(std::fabs(t->center - static_cast<double>(brute)), t->radius + 1e-9 * static_cast<double>(brute))
          << "j=" << j << " y=" << y;
    }
  }
  EXPECT_FALSE(f.moment_tail(2, -0.5, 64).has_value());
}

TEST(Validation, RejectsBadParameters) {
  EXPECT_THROW(SequenceFamily::arithmetic(0.0, 1.0, 0.5), ConfigurationError);
  EXPECT_THROW(SequenceFamily::power_law(1.0, 0.5), ConfigurationError);
  EXPECT_THROW(SequenceFamily::lattice3d(-1.0), ConfigurationError);
  EXPECT_THROW(SequenceFamily::explicit_prefix({1, 0}, {1, 2}, TailRule{}), ConfigurationError);
  EXPECT_THROW(SequenceFamily::explicit_prefix({1}, {1, 2}, TailRule{}), ConfigurationError);
  EXPECT_THROW(SequenceFamily::explicit_prefix({1}, {std::nan("")}, TailRule{}), ConfigurationError);
  EXPECT_THROW(SequenceFamily::weighted_geometric(-1.0, 0.0), ConfigurationError);
  TailRule bad_const{TailShape::Constant, 1.0, 1.0};
  EXPECT_THROW(SequenceFamily::explicit_prefix({}, {}, bad_const), ConfigurationError);
}

TEST(Validation, AcceptsEventuallyLargeWeights) {
  // p_n = e^n / n^3 dips below 1 at n = 2..4 and then grows
  const auto f = SequenceFamily::weighted_geometric(1.0, 3.0);
  EXPECT_LT(f.p(3), 1.0);
  EXPECT_GT(f.p(10), 1.0);
}

TEST(Structure, DetectsDegenerateFamilies) {
  EXPECT_EQ(SequenceFamily::arithmetic(5.0, 0.0).structure(), FamilyStructure::ConstantSigma);
  TailRule c{TailShape::Constant, 4.0, 0.0};
  EXPECT_EQ(SequenceFamily::explicit_prefix({1, 1}, {4, 4}, c).structure(), FamilyStructure::ConstantSigma);
  EXPECT_EQ(SequenceFamily::explicit_prefix({1, 1}, {1, 7}, c).structure(), FamilyStructure::AllDivergent);
  EXPECT_EQ(SequenceFamily::geometric().structure(), FamilyStructure::Regular);
}

TEST(Metadata, AlphaAndCase) {
  EXPECT_EQ(SequenceFamily::geometric().analytic_alpha(), 0.0);
  EXPECT_EQ(SequenceFamily::geometric().analytic_case(), BoundaryCase::OpenDomain);
  const auto z = SequenceFamily::weighted_geometric(1.0, 3.0);
  EXPECT_EQ(z.analytic_alpha(), 1.0);
  EXPECT_EQ(z.analytic_case(), BoundaryCase::ClosedGammaFinite);
  EXPECT_EQ(SequenceFamily::weighted_geometric(1.0, 2.0).analytic_case(), BoundaryCase::ClosedGammaInfinite);
  EXPECT_EQ(SequenceFamily::log_levels(1.0).analytic_alpha(), 1.0);
  EXPECT_NEAR(z.alpha_estimate(4000), 1.0, 1e-2);
}

TEST(Transform, ReflectAndShift) {
  const auto f = SequenceFamily::arithmetic(-1.0, -2.0);
  EXPECT_EQ(f.direction(), -1);
  const auto g = f.transformed(-1, 0.5);
  EXPECT_EQ(g.direction(), 1);
  for (long n = 1; n < 20; ++n) {
    EXPECT_EQ(g.sigma(n), -f.sigma(n) - 0.5);
    EXPECT_EQ(g.p(n), f.p(n));
  }
  const auto l = SequenceFamily::lattice3d(1.0).transformed(1, 2.0);
  EXPECT_EQ(l.sigma(1), 1.0);
  EXPECT_THROW(SequenceFamily::lattice3d(1.0).transformed(-1, 0.0), PreconditionError);
}
