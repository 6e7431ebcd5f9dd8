#include <gtest/gtest.h>

#include <cmath>

#include "tfmean/bounds.hpp"
#include "tfmean/error.hpp"
#include "tfmean/sampling.hpp"

using namespace tfm;

TEST(Losses, Examples) {
  EXPECT_DOUBLE_EQ(power_loss(2, 0.7, 3), 9.0);
  EXPECT_DOUBLE_EQ(power_loss(1.5, 1, 4), 8.0);
  EXPECT_EQ(power_loss(1.5, 1, 0), 0.0);
  EXPECT_THROW(power_loss(1.5, 0, 1), DomainError);
  EXPECT_DOUBLE_EQ(general_loss(Transform::power(2), 1, 3), 18.0);
  EXPECT_NEAR(general_loss(Transform::pseudo_huber(1), 0.5, 0.1), 0.01 * std::pow(2.0, -1.5), 1e-17);
  EXPECT_EQ(general_loss(Transform::pseudo_huber(1), 0.5, 0), 0.0);
  EXPECT_THROW(general_loss(Transform::identity(), 1, 1), InapplicableError);
  EXPECT_EQ(median_loss(0), 0.0);
  EXPECT_EQ(median_loss(0.5), 0.25);
  EXPECT_EQ(median_loss(3), 3.0);
}

TEST(PowerRate, ThreeHalfsConstants) {
  const auto c = power_rate_constants(1.5);
  EXPECT_NEAR(c.c0, 90.50966799187809, 1e-9);  // 2^4.5 / 0.25
  EXPECT_NEAR(c.c1, 6.863961030678928, 1e-9);
  EXPECT_NEAR(c.c2, 1.8409902576697066, 1e-9);
  EXPECT_LE(c.c0, 91);
  EXPECT_LE(c.c1, 7);
  EXPECT_LE(c.c2, 2);
}

TEST(PowerRate, CasesAgreeAtThreeHalfs) {
  const auto lo = power_rate_constants(1.5 - 1e-12), hi = power_rate_constants(1.5 + 1e-12);
  EXPECT_NEAR(lo.c0, hi.c0, 1e-8);
  EXPECT_NEAR(lo.c1, hi.c1, 1e-8);
  EXPECT_NEAR(lo.c2, hi.c2, 1e-8);
}

TEST(PowerRate, FullBound) {
  MomentSet ms;
  for (double a : {0.5, 1.0, 1.5}) ms.set_power(a, 1.0);
  const auto c = power_rate_constants(1.5);
  EXPECT_NEAR(power_rate_constant(1.5, ms, 100).value(), c.c0 * (c.c1 + c.c2 / 100) / 100, 1e-12);
  // n -> infinity: n * bound -> C0 C1.
  EXPECT_NEAR(power_rate_constant(1.5, ms, 1e12).value() * 1e12, c.c0 * c.c1, 1e-6);
  EXPECT_LE(power_rate_constant(1.5, ms, 100).value(), threehalfs_bound(1, 1, 1, 100).value());
  MomentSet missing;
  missing.set_power(0.5, 1.0);
  try {
    power_rate_constant(1.5, missing, 10);
    FAIL();
  } catch (const MissingMomentError& e) {
    EXPECT_EQ(e.tag().rfind("sigma_1", 0), 0u) << e.tag();
  }
  MomentSet inf;
  for (double a : {0.5, 1.0}) inf.set_power(a, 1.0);
  inf.set_power(1.5, ExtReal::infinity());
  EXPECT_TRUE(power_rate_constant(1.5, inf, 10).is_infinite());
}

TEST(PowerRate, OtherAlphaExponents) {
  const auto hi = power_rate_moment_exponents(1.8);
  ASSERT_EQ(hi.size(), 3u);
  EXPECT_NEAR(hi[0], 0.8, 1e-15);
  const auto lo = power_rate_moment_exponents(1.2);
  EXPECT_NEAR(lo[0], 0.8, 1e-15);
  MomentSet ms;
  for (double a : hi) ms.set_power(a, 2.0);
  EXPECT_GT(power_rate_constant(1.8, ms, 50).value(), 0.0);
  EXPECT_THROW(power_rate_constants(2.5), DomainError);
}

TEST(ThreeHalfs, Examples) {
  EXPECT_NEAR(threehalfs_bound(1, 1, 1, 100).value(), 6.3882, 1e-12);
  EXPECT_EQ(threehalfs_bound(0, 0, 0, 1).value(), 0.0);
  const double r = threehalfs_bound(1, 2, 3, 2e8).value() / threehalfs_bound(1, 2, 3, 1e8).value();
  EXPECT_NEAR(r, 0.5, 1e-8);
  EXPECT_TRUE(threehalfs_bound(1, 1, ExtReal::infinity(), 10).is_infinite());
}

TEST(GeneralRate, EntropicGH) {
  const auto t = Transform::entropic();
  for (double x : {0.0, 0.1, 1.0, 3.0}) {
    EXPECT_NEAR(general_rate_g(t, x), 1 + 7 * x, 1e-12 * (1 + 7 * x));
    EXPECT_NEAR(general_rate_h(t, x), 7 * std::exp(12 * x) - 6, 1e-9 * std::exp(12 * x));
  }
}

TEST(GeneralRate, PowerTwoReduces) {
  const auto t = Transform::power(2);
  EXPECT_DOUBLE_EQ(general_rate_g(t, 3), 0.5);
  EXPECT_DOUBLE_EQ(general_rate_h(t, 3), 0.5);
  const auto dist = DistributionSpec::parse("radial:halfgauss:1@euclidean:3");
  const auto ms = general_rate_moments(dist, t, 100, 2, 200000, 100, 1);
  const auto g = general_rate_terms(t, ms, 100, 2);
  EXPECT_TRUE(g.r0.is_finite());
  // S_1 = max(sigma_g, 2 h(sigma_tau'), E h(2 sigma_hat)) = max(1/2, 1, 1/2).
  EXPECT_NEAR(g.S_1.value(), 1.0, 1e-12);
  // Order sigma_2 / n: the bound times n stays bounded as n grows.
  const auto ms2 = general_rate_moments(dist, t, 10000, 2, 200000, 100, 1);
  const auto g2 = general_rate_terms(t, ms2, 10000, 2);
  EXPECT_LT(g2.bound.value() * 10000, 2 * g.bound.value() * 100);
}

TEST(GeneralRate, BnDecreases) {
  // h grows like exp(12 x) for the entropic transform, so b_n only decays, slowly.
  const auto t = Transform::entropic();
  const auto dist = DistributionSpec::parse("radial:pareto:3:1@euclidean:2");
  double prev = INFINITY;
  for (double n : {1e2, 1e4, 1e6}) {
    const auto ms = general_rate_moments(dist, t, n, 2, 100000, 50, 2);
    const double b = general_rate_terms(t, ms, n, 2).b_n.value();
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(GeneralRate, BnVanishes) {
  // With p = q = 2 the second factor decays like n^(-1/2).
  const auto t = Transform::power(1.5);
  const auto dist = DistributionSpec::parse("radial:halfgauss:1@euclidean:2");
  std::vector<double> b;
  for (double n : {1e2, 1e4, 1e6}) {
    const auto ms = general_rate_moments(dist, t, n, 2, 20000, 50, 2);
    b.push_back(general_rate_terms(t, ms, n, 2).b_n.value());
  }
  EXPECT_LT(b[1], 0.2 * b[0]);
  EXPECT_LT(b[2], 0.2 * b[1]);
}

TEST(GeneralRate, Inapplicable) {
  MomentSet ms;
  EXPECT_THROW(general_rate_terms(Transform::pseudo_huber(1), ms, 10, 2), InapplicableError);
  EXPECT_THROW(general_rate_terms(Transform::power(1.5), ms, 10, 1.0), DomainError);
  EXPECT_THROW(general_rate_terms(Transform::power(1.5), ms, 10, 2), MissingMomentError);
}

TEST(Location, Examples) {
  EXPECT_DOUBLE_EQ(deterministic_location_bound(1, 2, 1, 5), 21.0);
  for (double rho : {0.6, 0.7, 0.8, 0.9, 0.99}) {
    const double closed = 2 * rho * 2.0 * (1 - rho) / (2 * rho - 1);
    EXPECT_NEAR(location_x0(rho, 2.0, 1.0), closed, 1e-12);
    EXPECT_NEAR(median_location_radius(rho, 2.0), closed, 1e-12);
  }
  EXPECT_NEAR(median_location_radius(2.0 / 3.0, 2.0), 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(median_location_radius(0.75, 2.0), 1.5, 1e-15);
  EXPECT_THROW(deterministic_location_bound(0.5, 1, 1, 1), InapplicableError);
  EXPECT_THROW(deterministic_location_bound(0.52, 1, 0.9, 1), InapplicableError);
}

TEST(Location, MonotoneInRadius) {
  for (double rho : {0.6, 0.8, 0.95})
    for (double lam : {0.8, 0.9, 1.0}) {
      if (!(rho > 1 / (1 + lam))) continue;
      double prev = -1;
      for (double r = 0.5; r < 10; r += 0.5) {
        const double b = deterministic_location_bound(rho, 1.5, lam, r);
        EXPECT_GE(b, prev);
        prev = b;
      }
    }
}

TEST(Tail, Examples) {
  const auto b = tail_bound(0.9, 0.75, 8.0 / 9.0, 1, 10);
  EXPECT_NEAR(b.radius_multiplier, 6.0, 1e-12);
  const double expect = std::pow(2 * std::pow(1.0 / 9.0, 0.25), 10);
  EXPECT_NEAR(b.probability_bound, expect, 1e-13 * expect);
  EXPECT_EQ(tail_bound(0.9, 0.75, 1.0, 1, 10).probability_bound, 0.0);
  const double p = tail_bound(0.9, 0.75, 1 - 1.0 / 256, 1, 32).probability_bound;
  EXPECT_NEAR(p, std::ldexp(1.0, -32), 1e-13 * std::ldexp(1.0, -32));
  EXPECT_THROW(tail_bound(0.9, 0.5, 0.5, 1, 10), InapplicableError);
}

TEST(Tail, MedianExamples) {
  const auto b = median_tail_bound(2.0 / 3.0, 0.9, 1, 48);
  EXPECT_NEAR(b.radius_multiplier, 29.0 / 5.0, 1e-14);
  const double expect = std::pow(2 * std::cbrt(0.1), 48);
  EXPECT_NEAR(b.probability_bound, expect, 1e-12 * expect);
  EXPECT_NEAR(median_tail_bound(0.6, 1.0, 1, 3).radius_multiplier, 5.8, 1e-14);
  EXPECT_EQ(median_tail_bound(0.6, 1.0, 1, 3).probability_bound, 0.0);
  EXPECT_THROW(median_tail_bound(0.5, 0.9, 1, 3), InapplicableError);
}

TEST(Tail, MonotoneInRhoAndN) {
  double prev = INFINITY;
  for (double rho = 0.9; rho <= 1.0; rho += 0.01) {
    const double p = tail_bound(0.9, 0.75, rho, 1, 20).probability_bound;
    EXPECT_LE(p, prev);
    prev = p;
  }
  prev = INFINITY;
  for (double n = 1; n < 50; ++n) {
    const double p = median_tail_bound(2.0 / 3.0, 0.95, 1, n).probability_bound;
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(Tail, RadiusCondition) {
  const auto t = Transform::pseudo_huber(1);
  const double R = 2 * 0.9 / (1 - 0.81);
  EXPECT_TRUE(tail_radius_condition(t, 0.9, R / 2));
  EXPECT_FALSE(tail_radius_condition(t, 0.9, R / 2 * 0.99));
  EXPECT_TRUE(tail_radius_condition(Transform::identity(), 0.99, 1e-6));
}

TEST(Moments, SetAndGet) {
  MomentSet ms;
  ms.set_power(1.5, 6.0, Provenance::Plugin, 1000);
  EXPECT_TRUE(ms.has_power(1.5 + 1e-14));
  EXPECT_EQ(ms.power_entry(1.5).sample_size, 1000u);
  ms.set(MomentSet::kChi, 1.2);
  EXPECT_EQ(ms.get("chi").value(), 1.2);
  EXPECT_THROW(ms.get("sigma_dtau"), MissingMomentError);
  EXPECT_EQ(ms.entries().size(), 2u);
}
