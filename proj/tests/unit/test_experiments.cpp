#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tfmean/bounds.hpp"
#include "tfmean/error.hpp"
#include "tfmean/experiments.hpp"

using namespace tfm;

namespace {

ExperimentConfig base(ExperimentKind kind, const char* dist, const char* t) {
  ExperimentConfig c;
  c.kind = kind;
  c.distribution = dist;
  c.transform = t;
  c.n_grid = {8, 32};
  c.replications = 20;
  c.threads = 1;
  c.plugin_draws = 20000;
  c.plugin_outer = 20;
  return c;
}

std::string csv(const ExperimentResult& r) {
  std::ostringstream a;
  write_records_csv(a, r);
  write_aggregate_csv(a, r);
  return a.str();
}

}  // namespace

TEST(FitLogSlope, Examples) {
  EXPECT_NEAR(fit_log_slope({{1, 1}, {10, 0.1}}), -1.0, 1e-15);
  EXPECT_NEAR(fit_log_slope({{1, 3}, {10, 3}}), 0.0, 1e-15);
  EXPECT_NEAR(fit_log_slope({{1, 1}, {100, 0.01}}), -1.0, 1e-15);
  EXPECT_THROW(fit_log_slope({{1, 1}}), DomainError);
  EXPECT_THROW(fit_log_slope({{1, 1}, {2, 0}}), DomainError);
}

TEST(Config, JsonAndValidation) {
  const auto c = ExperimentConfig::from_json_text(R"({"kind": "rate", "distribution": "radial:halfgauss:1@euclidean:2",
      "transform": "power:2", "n_grid": [4, 16], "replications": 3, "base_seed": 9,
      "solver": {"method": "weiszfeld", "max_epochs": 50}, "slope_window": [-1.2, -0.8]})");
  EXPECT_EQ(c.kind, ExperimentKind::Rate);
  EXPECT_EQ(c.n_grid, (std::vector<std::size_t>{4, 16}));
  EXPECT_EQ(c.base_seed, 9u);
  EXPECT_EQ(c.solver.method, SolverMethod::Weiszfeld);
  EXPECT_EQ(c.solver.max_epochs, 50u);
  ASSERT_TRUE(c.slope_window.has_value());
  EXPECT_NO_THROW(c.validate());
  const auto back = ExperimentConfig::from_json_text(c.to_json_text());
  EXPECT_EQ(back.to_json_text(), c.to_json_text());

  auto bad = c;
  bad.n_grid = {16, 4};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.replications = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json_text(R"({"colour": 1})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json_text("{not json"), ConfigError);
}

TEST(Seeds, DisjointAcrossCells) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t n : {10, 100})
    for (std::uint64_t r = 0; r < 100; ++r)
      for (auto k : {ExperimentKind::Rate, ExperimentKind::Tail})
        EXPECT_TRUE(seen.insert(replication_seed(0, k, n, r)).second);
}

TEST(Rate, PointMass) {
  const auto r = run_rate(base(ExperimentKind::Rate, "radial:point@euclidean:3", "power:1.5"));
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.dist, 0.0);
    EXPECT_EQ(rec.loss, 0.0);
  }
}

TEST(Rate, ArithmeticMeanOracle) {
  // radius |N| in R^4: E||Y||^2 = 1, so E||mean - m||^2 = 1 / n.
  auto c = base(ExperimentKind::Rate, "radial:halfgauss:1@euclidean:4", "power:2");
  c.n_grid = {10, 100};
  c.replications = 400;
  const auto r = run_rate(c);
  for (const auto& a : r.aggregates) EXPECT_NEAR(a.mean_loss, 1.0 / a.n, 3 * a.stderr_) << a.n;
}

TEST(Rate, RecomputableLoss) {
  const auto c = base(ExperimentKind::Rate, "radial:pareto:1.8:1@euclidean:3", "power:1.5");
  const auto r = run_rate(c);
  const double chi = std::stod(std::find_if(r.metadata.begin(), r.metadata.end(), [](auto& kv) {
                                 return kv.first == "chi";
                               })->second);
  for (const auto& rec : r.records) EXPECT_EQ(rec.loss, power_loss(1.5, chi, rec.dist));
  for (const auto& a : r.aggregates) EXPECT_TRUE(a.pass);
}

TEST(Rate, DeterministicAcrossThreads) {
  auto c = base(ExperimentKind::Rate, "radial:pareto:1.8:1@euclidean:3", "entropic");
  const auto one = csv(run_rate(c));
  c.threads = 4;
  EXPECT_EQ(csv(run_rate(c)), one);
}

TEST(Rate, IncompatibleTransform) {
  EXPECT_THROW(run_rate(base(ExperimentKind::Rate, "radial:halfgauss:1@euclidean:2", "huber:1")), ConfigError);
}

TEST(Tail, PerfectConcentration) {
  auto c = base(ExperimentKind::Tail, "radial:powercdf:2:1@euclidean:2", "pseudo-huber:1");
  c.tail_r = 8;  // support inside the ball: rho = 1
  const auto r = run_tail(c);
  for (const auto& rec : r.records) EXPECT_EQ(rec.loss, 0.0);
  for (const auto& a : r.aggregates) EXPECT_EQ(a.bound, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Tail, MedianMultiplier) {
  auto c = base(ExperimentKind::Tail, "radial:pareto:1:1@euclidean:2", "identity");
  c.tail_r = 10;  // rho = 9/10
  const auto r = run_tail(c);
  const auto it = std::find_if(r.metadata.begin(), r.metadata.end(), [](auto& kv) {
    return kv.first == "corollary_multiplier";
  });
  EXPECT_NEAR(std::stod(it->second), 5.8, 1e-12);
}

TEST(Tail, MassConditionViolated) {
  auto c = base(ExperimentKind::Tail, "radial:pareto:2:1@euclidean:2", "pseudo-huber:1");
  c.tail_r = 2;  // rho = 3/4 < 8/9
  EXPECT_THROW(run_tail(c), InapplicableError);
  c.transform = "power:1.5";
  EXPECT_THROW(run_tail(c), ConfigError);
}

TEST(Breakdown, NoContaminationMatchesClean) {
  auto c = base(ExperimentKind::Breakdown, "radial:powercdf:2:1@euclidean:2", "pseudo-huber:1");
  c.n_grid = {50};
  c.replications = 5;
  c.radii = {10, 1000};
  c.epsilon = 0;
  const auto r = run_breakdown(c);
  for (std::size_t rep = 0; rep < 5; ++rep) EXPECT_EQ(r.records[2 * rep].dist, r.records[2 * rep + 1].dist);
  EXPECT_TRUE(r.pass);
}

TEST(Breakdown, Dichotomy) {
  auto c = base(ExperimentKind::Breakdown, "radial:powercdf:2:1@euclidean:2", "pseudo-huber:1");
  c.n_grid = {100};
  c.replications = 5;
  c.radii = {10, 1e3, 1e5};
  c.epsilon = 0.4;
  EXPECT_TRUE(run_breakdown(c).pass);
  c.transform = "power:1.5";
  EXPECT_TRUE(run_breakdown(c).pass);
}

TEST(FastRate, ConfigChecks) {
  auto c = base(ExperimentKind::FastRate, "radial:powercdf:0.25:1@euclidean:1", "power:1.5");
  c.beta = 1.75;
  EXPECT_NO_THROW(run_fast_rate(c));
  c.beta = 1.9;
  EXPECT_THROW(run_fast_rate(c), ConfigError);
  c.beta = 2.5;
  EXPECT_THROW(run_fast_rate(c), ConfigError);
  c = base(ExperimentKind::FastRate, "radial:halfgauss:1@euclidean:1", "power:1.5");
  EXPECT_THROW(run_fast_rate(c), ConfigError);
}

TEST(MedianRate, BowtiePrecondition) {
  auto c = base(ExperimentKind::MedianRate, "radial:powercdf:2:1@euclidean:2", "identity");
  c.bowtie_w = 0.1;
  c.bowtie_draws = 2000;
  EXPECT_NO_THROW(run_median_rate(c));
  c.distribution = "radial:halfgauss:1@euclidean:1";  // a line
  c.bowtie_w = 0;
  EXPECT_THROW(run_median_rate(c), InapplicableError);
}

TEST(Stability, PointMass) {
  auto c = base(ExperimentKind::Stability, "radial:point@euclidean:2", "power:1.5");
  c.n_grid = {16};
  c.replications = 3;
  c.n_test = 1000;
  const auto r = run_stability_diagnostic(c);
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.aux1, 0.0);
    EXPECT_EQ(rec.bound, 0.0);
  }
}

TEST(Stability, DiagnosticBoundsHold) {
  auto c = base(ExperimentKind::Stability, "radial:pareto:1.8:1@euclidean:4", "power:1.5");
  c.n_grid = {32};
  c.replications = 5;
  c.n_test = 20000;
  const auto r = run_stability_diagnostic(c);
  EXPECT_TRUE(r.pass);
}

TEST(Checks, Suite) {
  ExperimentConfig c;
  c.kind = ExperimentKind::Checks;
  c.space = "spd:2";
  c.transform = "log-cosh";
  c.check_trials = 2000;
  const auto r = run_checks(c);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.records.size(), 5u);
}

TEST(Output, Format) {
  auto c = base(ExperimentKind::Rate, "radial:halfgauss:1@euclidean:2", "power:2");
  c.n_grid = {4};
  c.replications = 2;
  const auto r = run_rate(c);
  std::ostringstream rec, agg;
  write_records_csv(rec, r);
  write_aggregate_csv(agg, r);
  EXPECT_NE(rec.str().find("\nn,rep,seed,dist,loss,bound,aux1,aux2\n"), std::string::npos);
  EXPECT_NE(agg.str().find("\nn,mean_loss,stderr,bound,pass\n"), std::string::npos);
}
