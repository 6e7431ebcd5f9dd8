#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tfmean/error.hpp"
#include "tfmean/estimators.hpp"
#include "tfmean/numeric.hpp"
#include "tfmean/point_io.hpp"
#include "tfmean/rng.hpp"
#include "tfmean/sampling.hpp"

using namespace tfm;

TEST(Rng, FixedReferenceValues) {
  // splitmix64 reference outputs for state 0 (first three values).
  EXPECT_EQ(splitmix64_mix(0x9e3779b97f4a7c15ULL), 0xe220a8397b1dcdafULL);
  CounterRng a = CounterRng::stream(1, 2), b = CounterRng::stream(1, 2), c = CounterRng::stream(1, 3);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform_open();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Sampling, PointMass) {
  const auto d = DistributionSpec::parse("radial:point@euclidean:3");
  const auto pts = d.sample(5, 42);
  ASSERT_EQ(pts.size(), 5u);
  for (const auto& p : pts) EXPECT_EQ(d.space().distance(p, d.center()), 0.0);
}

TEST(Sampling, ParetoMomentOracle) {
  const auto d = DistributionSpec::parse("radial:pareto:1.8:1@euclidean:4");
  const double m = plugin_expectation(d, [](double r) { return std::pow(r, 1.5); }, 1000000, 3);
  EXPECT_NEAR(m, 6.0, 0.3);
  EXPECT_NEAR(d.radial_law()->moment(1.5).value(), 1.8 / 0.3, 1e-12);
  EXPECT_TRUE(d.radial_law()->moment(2.0).is_infinite());
}

TEST(Sampling, Determinism) {
  for (const char* spec : {"radial:pareto:1.8:1@euclidean:16", "star:3:halfgauss:1", "spd-sym:3:0.5",
                           "fourpoint:0.75:100", "radial:powercdf:0.25:1@euclidean:1"}) {
    const auto d = DistributionSpec::parse(spec);
    std::stringstream a, b;
    write_points(a, d.space(), d.sample(50, 9));
    write_points(b, d.space(), d.sample(50, 9));
    EXPECT_EQ(a.str(), b.str()) << spec;
    // Prefix stability.
    const auto shorter = d.sample(20, 9), longer = d.sample(50, 9);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(format_point(d.space(), shorter[i]), format_point(d.space(), longer[i])) << spec;
  }
}

TEST(Sampling, RadialLaws) {
  const auto p = RadialLaw::pareto(2.0, 0.5);
  EXPECT_DOUBLE_EQ(p.exceedance(8.0), 1.0 / 256.0);
  EXPECT_NEAR(p.exceedance_radius(1.0 / 256.0), 8.0, 1e-12);
  EXPECT_NEAR(p.median(), 0.5 * std::sqrt(2.0), 1e-15);
  const auto c = RadialLaw::power_cdf(0.25, 2.0);
  EXPECT_NEAR(1.0 - c.exceedance(0.5), std::pow(0.25, 0.25), 1e-15);
  EXPECT_DOUBLE_EQ(c.sup().value(), 2.0);
  EXPECT_TRUE(p.sup().is_infinite());
  const auto h = RadialLaw::half_gaussian(2.0);
  EXPECT_NEAR(h.moment(2).value(), 4.0, 1e-12);
  EXPECT_NEAR(h.median(), 2.0 * 0.6744897501960817, 1e-9);
  EXPECT_THROW(RadialLaw::parse("pareto:-1:1"), ConfigError);
  EXPECT_THROW(RadialLaw::parse("weibull:2"), ConfigError);
}

TEST(Sampling, PowerCdfLawMatchesCondition) {
  const auto d = DistributionSpec::parse("radial:powercdf:0.25:1@euclidean:1");
  for (double x : {1e-4, 1e-2, 0.3}) {
    const double frac = plugin_expectation(d, [x](double r) { return r <= x ? 1.0 : 0.0; }, 200000, 5);
    const double p = std::pow(x, 0.25);
    EXPECT_NEAR(frac, p, 4 * std::sqrt(p * (1 - p) / 200000)) << x;
  }
}

TEST(Sampling, MomentControllability) {
  // sigma_alpha settles, sigma_2 keeps growing, for Pareto(a) with alpha < a < 2.
  const auto d = DistributionSpec::parse("radial:pareto:1.8:1@euclidean:1");
  auto mean_pow = [&](double a, std::size_t n) {
    return plugin_expectation(d, [a](double r) { return std::pow(r, a); }, n, 21);
  };
  const double s15a = mean_pow(1.5, 100000), s15b = mean_pow(1.5, 1000000);
  const double s2a = mean_pow(2.0, 100000), s2b = mean_pow(2.0, 1000000);
  RecordProperty("sigma15_change", std::to_string(std::abs(s15b / s15a - 1)));
  RecordProperty("sigma2_growth", std::to_string(s2b / s2a - 1));
  EXPECT_GT(s2b / s2a - 1.0, 0.5);
  // The sigma_1.5 plug-in has infinite variance, so its relative change is
  // only bounded loosely here; the 1% target is reported by the acceptance run.
  EXPECT_LT(std::abs(s15b / s15a - 1.0), 0.1);
}

TEST(Sampling, Contaminate) {
  const auto d = DistributionSpec::parse("radial:halfgauss:1@euclidean:2");
  const auto clean = d.sample(10000, 1);
  Vector c(2);
  c << 1e3, 0;
  const auto dirty = contaminate(clean, 0.3, Point(c), 8);
  std::size_t replaced = 0;
  for (std::size_t i = 0; i < dirty.size(); ++i) {
    if (d.space().distance(dirty[i], c) == 0.0) ++replaced;
    else EXPECT_EQ(d.space().distance(dirty[i], clean[i]), 0.0);
  }
  EXPECT_NEAR(static_cast<double>(replaced) / 1e4, 0.3, 3 * std::sqrt(0.3 * 0.7 / 1e4));
  EXPECT_THROW(contaminate(clean, 0.0, Point(c), 1), DomainError);
  EXPECT_THROW(contaminate(clean, 1.0, Point(c), 1), DomainError);
}

TEST(Sampling, PopulationMean) {
  const auto r = DistributionSpec::parse("radial:halfgauss:1@euclidean:3");
  EXPECT_EQ(std::get<Vector>(population_mean(r, Transform::power(1.5))).norm(), 0.0);
  const auto star = DistributionSpec::parse("star:3:halfgauss:1");
  EXPECT_EQ(star.space().distance(population_mean(star, Transform::identity()), star.space().as_tree()->vertex_point(0)),
            0.0);
  EXPECT_THROW(population_mean(DistributionSpec::parse("fourpoint:0.75:10"), Transform::identity()),
               NoAnalyticMeanError);
}

TEST(Sampling, SymmetricFamiliesOracle) {
  // Large-sample estimates land near the symmetry center.
  struct Case {
    const char* dist;
    const char* transform;
    std::size_t n;
  };
  for (const auto& c : {Case{"spd-sym:2:0.5", "power:2", 20000}, Case{"star:3:halfgauss:1", "identity", 20000},
                        Case{"radial:pareto:1.8:1@euclidean:2", "power:1.5", 100000}}) {
    const auto d = DistributionSpec::parse(c.dist);
    const auto t = Transform::parse(c.transform);
    const auto est = estimate(d.space(), t, d.sample(c.n, 17));
    const double dist = d.space().distance(est.point, population_mean(d, t));
    EXPECT_LT(dist, 5.0 / std::sqrt(static_cast<double>(c.n)) * 5) << c.dist;
  }
}

TEST(Sampling, FourPointMultiset) {
  const auto pts = four_point_multiset(2.0 / 3.0, 1e6);
  ASSERT_EQ(pts.size(), 6u);
  const auto pts2 = four_point_multiset(0.75, 1e6);
  ASSERT_EQ(pts2.size(), 8u);
  int spikes = 0;
  for (const auto& p : pts2) spikes += std::get<Vector>(p)(1) > 0 ? 1 : 0;
  EXPECT_EQ(spikes, 2);
}

TEST(Sampling, RadiusMedian) {
  bool est = true;
  const double m = radius_median(DistributionSpec::parse("radial:pareto:3:1@euclidean:2"), &est);
  EXPECT_FALSE(est);
  EXPECT_NEAR(m, std::cbrt(2.0), 1e-12);
  const double ms = radius_median(DistributionSpec::parse("spd-sym:2:0.5"), &est, 100000, 1);
  EXPECT_TRUE(est);
  EXPECT_GT(ms, 0.0);
}

TEST(Sampling, SpecErrors) {
  EXPECT_THROW(DistributionSpec::parse("radial:pareto:1.8:1"), ConfigError);
  EXPECT_THROW(DistributionSpec::parse("star:2:halfgauss:1"), ConfigError);
  EXPECT_THROW(DistributionSpec::parse("fourpoint:0.4:10"), ConfigError);
  EXPECT_THROW(DistributionSpec::parse("gaussian:2"), ConfigError);
}
