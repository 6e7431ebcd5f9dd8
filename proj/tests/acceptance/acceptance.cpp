// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "tfmean/bounds.hpp"
#include "tfmean/checks.hpp"
#include "tfmean/estimators.hpp"
#include "tfmean/experiments.hpp"
#include "tfmean/rng.hpp"
#include "tfmean/sampling.hpp"

using namespace tfm;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s  %-4s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Point> random_sample(const Space& s, std::size_t n, std::uint64_t seed) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_point(s, seed, i));
  return out;
}

std::string meta(const ExperimentResult& r, const std::string& key) {
  for (const auto& [k, v] : r.metadata)
    if (k == key) return v;
  return "?";
}

// Re-derives the sample and solver configuration of replication (n, r).
struct Replay {
  std::vector<Point> sample;
  EstimateResult est;
};

Replay replay(const ExperimentConfig& cfg, const DistributionSpec& dist, const Transform& t, std::size_t n,
              std::size_t r) {
  const auto seed = replication_seed(cfg.base_seed, cfg.kind, n, r);
  SolverConfig sc = cfg.solver;
  sc.shuffle_seed = mix_seed({cfg.solver.shuffle_seed, seed});
  auto sample = dist.sample(n, seed);
  auto est = estimate(dist.space(), t, sample, sc);
  return {std::move(sample), std::move(est)};
}

const char* kSpaces[] = {"euclidean:8", "star:5:10", "spd:3"};
const char* kTransforms[] = {"power:1.5", "power:2", "pseudo-huber:1", "log-cosh", "identity"};

// ---------------------------------------------------------------- 1, 2

void criterion_quadruple() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::size_t suites = 0, fails = 0;
  double worst = -INFINITY;
  for (const char* sp : kSpaces) {
    const auto s = Space::parse(sp);
    for (const char* tr : kTransforms) {
      const auto t = Transform::parse(tr);
      std::vector<double> constants = {0.0};  // the transform's own: sharp for powers
      if (t.is_power()) constants.push_back(2.0);
      for (double c : constants) {
        const auto rep = check_quadruple(s, t, 100000, 1, c);
        ++suites;
        fails += rep.failures;
        worst = std::max(worst, rep.worst);
        ok = ok && rep.pass;
        if (!rep.pass) std::printf("      %s constant=%g failures=%zu\n", rep.name.c_str(), c, rep.failures);
      }
    }
  }
  const double secs = seconds_since(t0);
  report("1", ok && secs < 120, "quadruple inequality",
         fmt("%zu suites x 1e5 quadruples, %zu violations, worst normalized gap %.3g, %.1f s", suites, fails, worst,
             secs));
}

void criterion_midpoint() {
  bool ok = true;
  std::string detail;
  for (const char* sp : kSpaces) {
    const auto rep = check_midpoint(Space::parse(sp), 100000, 2);
    ok = ok && rep.pass;
    detail += fmt("%s worst %.2g; ", sp, rep.worst);
  }
  report("2", ok, "CAT(0) midpoint inequality (1e5 triples per space)", detail);
}

// ---------------------------------------------------------------- 3 (+10)

struct Minimizer {
  Space space;
  Transform t;
  std::vector<Point> sample;
  Point m;
};

void criterion_solver(std::vector<Minimizer>& found) {
  // (a) arithmetic mean.
  double worst_mean = 0.0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const int d = 1 + static_cast<int>(k % 16);
    const auto s = Space::euclidean(d);
    const auto sample = random_sample(s, 2 + k % 40, 500 + k);
    Vector mean = Vector::Zero(d);
    for (const auto& p : sample) mean += std::get<Vector>(p);
    mean /= static_cast<double>(sample.size());
    const auto r = estimate(s, Transform::power(2), sample);
    worst_mean = std::max(worst_mean, (std::get<Vector>(r.point) - mean).norm());
    found.push_back({s, Transform::power(2), sample, r.point});
  }
  // (b) median objective on the line.
  double worst_median = 0.0;
  const auto e1 = Space::euclidean(1);
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto sample = random_sample(e1, 1 + k % 30, 900 + k);
    std::vector<double> xs;
    for (const auto& p : sample) xs.push_back(std::get<Vector>(p)(0));
    std::sort(xs.begin(), xs.end());
    const double med = xs[(xs.size() - 1) / 2];
    const double want = objective(e1, Transform::identity(), sample, Point(Vector(Vector::Constant(1, med))));
    const auto r = estimate(e1, Transform::identity(), sample);
    worst_median = std::max(worst_median, std::abs(r.objective - want));
    found.push_back({e1, Transform::identity(), sample, r.point});
  }
  // (c) brute-force oracle.
  const char* oracle_spaces[] = {"euclidean:1", "euclidean:2", "star:3:4"};
  const char* oracle_transforms[] = {"power:1.5", "power:2", "identity", "pseudo-huber:1",
                                     "log-cosh", "entropic", "huber:1"};
  double worst_oracle = 0.0;
  std::size_t instances = 0;
  for (const char* sp : oracle_spaces) {
    const auto s = Space::parse(sp);
    for (const char* tr : oracle_transforms) {
      const auto t = Transform::parse(tr);
      for (std::uint64_t k = 0; k < 200; ++k, ++instances) {
        const auto sample = random_sample(s, 2 + k % 15, 7000 + k);
        const double oracle = objective(s, t, sample, testing::oracle_minimize(s, t, sample));
        const auto r = estimate(s, t, sample);
        const double gap = std::abs(r.objective - oracle) / (1 + std::abs(oracle));
        if (gap > worst_oracle) worst_oracle = gap;
        found.push_back({s, t, sample, r.point});
      }
    }
  }
  report("3", worst_mean <= 1e-8 && worst_median <= 1e-10 && worst_oracle <= 1e-6, "solver exactness",
         fmt("mean err %.2g (<=1e-8), median objective err %.2g (<=1e-10), oracle rel gap %.2g over %zu instances "
             "(<=1e-6)",
             worst_mean, worst_median, worst_oracle, instances));
}

// ---------------------------------------------------------------- 4 (+10)

ExperimentConfig rate_config(const char* dist, const char* t, std::vector<std::size_t> grid, std::size_t reps) {
  ExperimentConfig c;
  c.kind = ExperimentKind::Rate;
  c.distribution = dist;
  c.transform = t;
  c.n_grid = std::move(grid);
  c.replications = reps;
  c.slope_window = std::pair{-1.25, -0.80};
  return c;
}

std::string aggregate_detail(const ExperimentResult& r) {
  std::string s;
  for (const auto& a : r.aggregates)
    s += fmt("n=%g mean %.4g+-%.2g bound %.4g; ", a.n, a.mean_loss, a.stderr_, a.bound);
  return s;
}

void criterion_power_rate(std::size_t& checked, double& worst) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = rate_config("radial:pareto:1.8:1@euclidean:16", "power:1.5", {16, 64, 256, 1024}, 2000);
  const auto r = run_rate(cfg);
  const double secs = seconds_since(t0);
  bool bounds_ok = true;
  for (const auto& a : r.aggregates) bounds_ok = bounds_ok && a.pass;
  report("4", r.pass && secs < 600, "power-rate reproduction (alpha=3/2, Pareto a=1.8, R^16)",
         fmt("slope %.3f in [-1.25,-0.80]; ", r.slope) + aggregate_detail(r) + fmt("%.1f s", secs));

  // Variance inequality at every computed minimizer of this run.
  const auto dist = DistributionSpec::parse(cfg.distribution);
  const auto t = Transform::parse(cfg.transform);
  for (auto n : cfg.n_grid) {
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      const auto rp = replay(cfg, dist, t, n, rep);
      const auto c = check_variance_inequality(dist.space(), t, rp.sample, rp.est.point, 1000, mix_seed({n, rep}));
      ++checked;
      worst = std::max(worst, c.worst);
    }
  }
}

void criterion_variance(const std::vector<Minimizer>& found, std::size_t checked, double worst) {
  std::size_t skipped = 0;
  std::string where = "power-rate run";
  for (std::size_t i = 0; i < found.size(); ++i) {
    const auto& f = found[i];
    if (f.t.classify() == Robustness::BoundedSlopeFlatTail) {
      ++skipped;
      continue;
    }
    const auto c = check_variance_inequality(f.space, f.t, f.sample, f.m, 1000, 40000 + i);
    ++checked;
    if (c.worst > worst) {
      worst = c.worst;
      where = f.space.describe() + " " + f.t.to_string() + fmt(" n=%zu", f.sample.size());
    }
  }
  report("10a", worst <= 0.0, "empirical variance inequality at computed minimizers",
         fmt("%zu minimizers x 1e3 q, worst violation %.3g (slack 1e-7 included) at ", checked, worst) + where +
             fmt("; %zu flat-tail (huber) skipped", skipped));
}

// ---------------------------------------------------------------- 5, 6 (+10)

ExperimentConfig tail_config(const char* dist, const char* t, double r, std::size_t n) {
  ExperimentConfig c;
  c.kind = ExperimentKind::Tail;
  c.distribution = dist;
  c.transform = t;
  c.tail_r = r;
  c.n_grid = {n};
  c.replications = 20000;
  return c;
}

void criterion_tail() {
  const auto cfg = tail_config("radial:pareto:2:0.5@euclidean:2", "pseudo-huber:1", 8.0, 32);
  const auto r = run_tail(cfg);
  const auto& a = r.aggregates.front();
  double maxd = 0;
  for (const auto& rec : r.records) maxd = std::max(maxd, rec.dist);
  report("5", r.pass && a.mean_loss == 0.0, "tail bound, pseudo-huber (P(d>r)=1/256, n=32, 2e4 reps)",
         fmt("exceedances of 6r: %g, bound %.4g (2^-32 = %.4g), rho=%s, max d(m,m_n)=%.3g vs 6r=%g",
             a.mean_loss * cfg.replications, a.bound, std::ldexp(1.0, -32), meta(r, "rho").c_str(), maxd, 6 * 8.0));
}

void criterion_median_tail() {
  const auto cfg = tail_config("radial:pareto:3:1@euclidean:2", "identity", 3.0, 48);
  const auto r = run_tail(cfg);
  const auto& a = r.aggregates.front();
  report("6", r.pass, "median tail bound (P(d>r)=1/27, n=48, 2e4 reps)",
         fmt("frequency of d > 29r/5: %g, bound %.4g + 3 se %.2g", a.mean_loss, a.bound, 3 * a.stderr_));

  // Median variance inequality (w = 0.5) at every computed median of this run.
  const auto dist = DistributionSpec::parse(cfg.distribution);
  const auto t = Transform::identity();
  double worst = -INFINITY;
  std::size_t checked = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
    const auto rp = replay(cfg, dist, t, cfg.n_grid.front(), rep);
    const auto c = check_median_variance_inequality(dist.space(), rp.sample, rp.est.point, 0.5, 1000,
                                                    mix_seed({48, rep}));
    worst = std::max(worst, c.worst);
    ++checked;
  }
  report("10b", worst <= 0.0, "median variance inequality (w=0.5) on criterion 6 runs",
         fmt("%zu medians x 1e3 q, worst violation %.3g, %.1f s", checked, worst, seconds_since(t0)));
}

// ---------------------------------------------------------------- 7

void criterion_breakdown() {
  ExperimentConfig c;
  c.kind = ExperimentKind::Breakdown;
  c.distribution = "radial:powercdf:2:1@euclidean:2";  // uniform on the unit disk
  c.n_grid = {200};
  c.replications = 50;
  c.epsilon = 0.4;
  c.radii = {1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  c.transform = "pseudo-huber:1";
  const auto bounded = run_breakdown(c);
  double max_disp = 0, min_cap = INFINITY;
  for (const auto& rec : bounded.records) {
    max_disp = std::max(max_disp, rec.dist);
    min_cap = std::min(min_cap, rec.bound);
  }
  c.transform = "power:1.5";
  const auto diverging = run_breakdown(c);
  report("7", bounded.pass && diverging.pass, "breakdown dichotomy (eps=0.4, radii 1e1..1e6, n=200, 50 reps)",
         fmt("pseudo-huber max displacement %.4g <= smallest cap %.4g; power:1.5 min growth 1e1->1e6 %s (> 1e3), "
             "non-monotone reps %s",
             max_disp, min_cap, meta(diverging, "min_growth").c_str(),
             meta(diverging, "non_monotone_replications").c_str()));
}

// ---------------------------------------------------------------- 8

void criterion_four_point() {
  bool ok = true;
  std::string detail;
  const auto s = Space::euclidean(2);
  for (auto [rho, want_f] : {std::pair{2.0 / 3.0, 8.0 / 3.0}, std::pair{0.75, 1.5}}) {
    const double f = median_location_radius(rho, 2.0);
    ok = ok && std::abs(f - want_f) <= 1e-12;
    const auto pts = four_point_multiset(rho, 1e6);
    for (auto method : {SolverMethod::Weiszfeld, SolverMethod::CyclicProx}) {
      SolverConfig sc;
      sc.method = method;
      const auto r = estimate(s, Transform::identity(), pts, sc);
      const Vector& m = std::get<Vector>(r.point);
      const double dx = std::max(std::abs(m(0)) - 1.0, 0.0);
      const double dist = std::hypot(dx, m(1));
      ok = ok && dist <= want_f + 1e-6;
      detail += fmt("rho=%.4g %s: d(m,B)=%.6f <= f=%.6f; ", rho, std::string(to_string(method)).c_str(), dist, f);
    }
  }
  report("8", ok, "four-point median geometry (s=1e6)", detail);
}

// ---------------------------------------------------------------- 9

void criterion_fast_rate() {
  ExperimentConfig c;
  c.kind = ExperimentKind::FastRate;
  c.transform = "power:1.5";
  c.n_grid = {100, 1000, 10000};
  c.replications = 2000;
  c.beta = 1.75;
  c.distribution = "radial:powercdf:0.25:1@euclidean:1";
  c.slope_window = std::pair{-0.67, -0.47};
  const auto fast = run_fast_rate(c);
  c.beta = 2.0;
  c.distribution = "radial:powercdf:0.5:1@euclidean:1";
  c.slope_window = std::pair{-0.60, -0.40};
  const auto control = run_fast_rate(c);
  report("9", fast.pass && control.pass, "fast rate (alpha=1.5, PowerCDF, R^1, 2000 reps)",
         fmt("beta=1.75 slope %.4f in [-0.67,-0.47] (target -0.5714); beta=2 slope %.4f in [-0.60,-0.40]",
             fast.slope, control.slope));
}

// ---------------------------------------------------------------- 11

void criterion_stability() {
  ExperimentConfig c;
  c.kind = ExperimentKind::Stability;
  c.distribution = "radial:pareto:1.8:1@euclidean:16";
  c.transform = "power:1.5";
  c.n_grid = {128};
  c.replications = 20;
  const auto r = run_stability_diagnostic(c);
  const auto& a = r.aggregates.front();
  double worst33 = 0;
  for (const auto& rec : r.records) worst33 = std::max(worst33, rec.aux2);
  report("11", r.pass, "stability diagnostics (n=128, power:1.5, 20 reps)",
         fmt("mean V_n %.4g+-%.2g <= 1.1 x mean bound %.4g; worst per-i ratio %.3g (<=1.1); worst tau'(d)/(8s+4s^) "
             "%s (<=1.1)",
             a.mean_loss, a.stderr_, a.bound, worst33, meta(r, "dtau_location_worst_ratio@n=128").c_str()));
}

// ---------------------------------------------------------------- 12

void criterion_calculators() {
  const auto c = power_rate_constants(1.5);
  bool ok = std::abs(c.c0 - 90.51) < 5e-3 && std::abs(c.c1 - 6.86) < 5e-3 && std::abs(c.c2 - 1.84) < 5e-3 &&
            c.c0 <= 91 && c.c1 <= 7 && c.c2 <= 2;
  double worst = 0;
  for (double rho : {0.6, 0.7, 0.8, 0.9, 0.99}) {
    for (double delta : {0.5, 2.0, 7.0}) {
      const double closed = 2 * rho * delta * (1 - rho) / (2 * rho - 1);
      const double b = std::sqrt(deterministic_location_bound(rho, delta, 1.0, 1e-300));
      worst = std::max(worst, std::abs(b - closed));
    }
  }
  ok = ok && worst <= 1e-12;
  report("12", ok, "bound calculators",
         fmt("C0=%.4f C1=%.4f C2=%.4f (<= 91, 7, 2); location bound vs closed form max err %.2g", c.c0, c.c1, c.c2,
             worst));
}

// ---------------------------------------------------------------- extra arms

void extra_rate_arms() {
  for (const char* t : {"entropic", "pseudo-huber:1"}) {
    const auto r = run_rate(rate_config("radial:pareto:1.8:1@euclidean:16", t, {16, 64, 256, 1024}, 2000));
    report("N1", r.pass, std::string("rate slope, ") + t + " (Pareto a=1.8, R^16, 2000 reps)",
           fmt("slope %.3f in [-1.25,-0.80]; ", r.slope) + aggregate_detail(r));
  }
  ExperimentConfig c;
  c.kind = ExperimentKind::MedianRate;
  c.distribution = "radial:powercdf:2:1@euclidean:2";
  c.transform = "identity";
  c.n_grid = {16, 64, 256, 1024};
  c.replications = 2000;
  c.slope_window = std::pair{-1.25, -0.80};
  const auto r = run_median_rate(c);
  report("N2", r.pass, "median rate slope (uniform disk, R^2, 2000 reps)",
         fmt("slope %.3f in [-1.25,-0.80]; bow-tie mass %s; max n*risk %s", r.slope, meta(r, "bowtie_mass").c_str(),
             meta(r, "max_n_times_risk").c_str()));
}

void sampling_invariant() {
  const auto d = DistributionSpec::parse("radial:pareto:1.8:1@euclidean:1");
  auto m = [&](double a, std::size_t n) {
    return plugin_expectation(d, [a](double x) { return std::pow(x, a); }, n, 0);
  };
  const double s15 = std::abs(m(1.5, 1000000) / m(1.5, 100000) - 1), s2 = m(2, 1000000) / m(2, 100000) - 1;
  report("S1", s15 < 0.01 && s2 > 0.5, "moment controllability (Pareto a=1.8)",
         fmt("sigma_1.5 relative change 1e5->1e6: %.4f (<0.01); sigma_2 growth %.3f (>0.5)", s15, s2));
}

}  // namespace

int main(int argc, char** argv) {
  // Optional filter: run only the listed criteria ids.
  auto want = [&](const char* id) {
    if (argc < 2) return true;
    for (int i = 1; i < argc; ++i)
      if (std::strcmp(argv[i], id) == 0) return true;
    return false;
  };
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Minimizer> found;
  std::size_t checked = 0;
  double worst = -INFINITY;
  if (want("1")) criterion_quadruple();
  if (want("2")) criterion_midpoint();
  if (want("3") || want("10")) criterion_solver(found);
  if (want("4") || want("10")) criterion_power_rate(checked, worst);
  if (want("10")) criterion_variance(found, checked, worst);
  if (want("5")) criterion_tail();
  if (want("6") || want("10")) criterion_median_tail();
  if (want("7")) criterion_breakdown();
  if (want("8")) criterion_four_point();
  if (want("9")) criterion_fast_rate();
  if (want("11")) criterion_stability();
  if (want("12")) criterion_calculators();
  if (want("N")) extra_rate_arms();
  if (want("S")) sampling_invariant();
  std::printf("%s  acceptance: %d failing line(s), %.1f s total\n", failures ? "FAIL" : "PASS", failures,
              seconds_since(t0));
  return failures ? 1 : 0;
}
