#include "tfmean/checks.hpp"

#include <algorithm>
#include <cmath>

#include "tfmean/estimators.hpp"
#include "tfmean/numeric.hpp"
#include "tfmean/rng.hpp"

namespace tfm {

namespace {

void record(CheckReport& r, double violation) {
  ++r.trials;
  r.worst = std::max(r.worst, violation);
  if (violation > 0.0) {
    ++r.failures;
    r.pass = false;
  }
}

double log_uniform(CounterRng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

Matrix random_symmetric(CounterRng& rng, int d) {
  Matrix s(d, d);
  for (int i = 0; i < d; ++i) {
    s(i, i) = rng.normal();
    for (int j = i + 1; j < d; ++j) s(i, j) = s(j, i) = rng.normal() / std::sqrt(2.0);
  }
  return s;
}

}  // namespace

Point random_point(const Space& s, std::uint64_t seed, std::uint64_t index) {
  auto rng = CounterRng::stream(mix_seed({seed, 0x70747321ULL}), index);
  if (const auto* tree = s.as_tree()) {
    const auto e = rng.below(tree->num_edges());
    return tree->canonical({e, rng.uniform() * tree->edge(e).length});
  }
  if (s.as_spd()) {
    const double scale = log_uniform(rng, 0.1, 2.0);
    return sym_exp(Matrix(scale * random_symmetric(rng, s.dim())));
  }
  const double scale = log_uniform(rng, 1e-2, 1e2);
  Vector v(s.dim());
  for (int i = 0; i < s.dim(); ++i) v(i) = scale * rng.normal();
  return v;
}

// Beyond this geodesic radius the SPD eigen-solvers lose the small eigenvalues.
constexpr double kSpdProbeRadius = 8.0;

double probe_radius(const Space& s, CounterRng& rng, double chi) {
  const double r = log_uniform(rng, chi / 100.0, chi * 100.0);
  return s.as_spd() ? std::min(r, kSpdProbeRadius) : r;
}

Point random_step(const Space& s, const Point& from, double radius, std::uint64_t seed, std::uint64_t index) {
  auto rng = CounterRng::stream(mix_seed({seed, 0x73746570ULL}), index);
  if (s.as_euclidean()) {
    Vector u(s.dim());
    do {
      for (int i = 0; i < s.dim(); ++i) u(i) = rng.normal();
    } while (u.norm() == 0.0);
    return Vector(std::get<Vector>(from) + radius * u / u.norm());
  }
  if (s.as_spd()) {
    Matrix dir = random_symmetric(rng, s.dim());
    dir /= dir.norm();
    const Matrix root = sym_sqrt(std::get<Matrix>(from));
    return symmetrize(root * sym_exp(Matrix(radius * dir)) * root);
  }
  const Point z = random_point(s, seed, index);
  const double d = s.distance(from, z);
  if (d == 0.0) return from;
  return s.geodesic_point(from, z, std::min(1.0, radius / d));
}

CheckReport check_quadruple(const Space& s, const Transform& t, std::size_t trials, std::uint64_t seed,
                            double constant) {
  CheckReport r;
  r.name = "quadruple[" + s.describe() + "," + t.to_string() + "]";
  const double c = constant > 0.0 ? constant : t.quadruple_constant();
  for (std::size_t k = 0; k < trials; ++k) {
    const Point q = random_point(s, seed, 4 * k);
    const Point p = random_point(s, seed, 4 * k + 1);
    const Point y = random_point(s, seed, 4 * k + 2);
    const Point z = random_point(s, seed, 4 * k + 3);
    const double a = t.tau(s.distance(y, q)), b = t.tau(s.distance(y, p));
    const double e = t.tau(s.distance(z, q)), f = t.tau(s.distance(z, p));
    const double rhs = c * s.distance(q, p) * t.dtau(s.distance(y, z));
    const double gap = a - b - e + f - rhs;
    const double scale = std::max({a, b, e, f, rhs});
    record(r, gap / (1e-9 * (1.0 + scale)) - 1.0);
  }
  return r;
}

CheckReport check_midpoint(const Space& s, std::size_t trials, std::uint64_t seed) {
  CheckReport r;
  r.name = "midpoint[" + s.describe() + "]";
  for (std::size_t k = 0; k < trials; ++k) {
    const Point y0 = random_point(s, seed, 3 * k);
    const Point y1 = random_point(s, seed, 3 * k + 1);
    const Point q = random_point(s, seed, 3 * k + 2);
    const double gap = midpoint_gap(s, y0, y1, q);
    const double a = s.distance(y0, q), b = s.distance(y1, q);
    const double scale = std::max(a * a, b * b);
    record(r, gap / (1e-9 * (1.0 + scale)) - 1.0);
  }
  return r;
}

CheckReport check_metric_axioms(const Space& s, std::size_t trials, std::uint64_t seed) {
  CheckReport r;
  r.name = "metric[" + s.describe() + "]";
  for (std::size_t k = 0; k < trials; ++k) {
    const Point a = random_point(s, seed, 3 * k);
    const Point b = random_point(s, seed, 3 * k + 1);
    const Point c = random_point(s, seed, 3 * k + 2);
    const double ab = s.distance(a, b), ba = s.distance(b, a);
    const double bc = s.distance(b, c), ac = s.distance(a, c);
    const double tol = 1e-9 * (1.0 + std::max({ab, bc, ac}));
    record(r, std::max(std::abs(ab - ba), ac - ab - bc) / tol - 1.0);
  }
  return r;
}

CheckReport check_geodesics(const Space& s, std::size_t trials, std::uint64_t seed) {
  CheckReport r;
  r.name = "geodesic[" + s.describe() + "]";
  for (std::size_t k = 0; k < trials; ++k) {
    const Point q = random_point(s, seed, 2 * k);
    const Point p = random_point(s, seed, 2 * k + 1);
    auto rng = CounterRng::stream(mix_seed({seed, 0x67656fULL}), k);
    const double ta = rng.uniform(), tb = rng.uniform();
    const double len = s.distance(q, p);
    const double gap = std::abs(s.distance(s.geodesic_point(q, p, ta), s.geodesic_point(q, p, tb)) -
                                std::abs(ta - tb) * len);
    double violation = gap / (1e-9 * std::max(1.0, len)) - 1.0;
    if (!s.same_point(s.geodesic_point(q, p, 0.0), s.canonical(q)) ||
        !s.same_point(s.geodesic_point(q, p, 1.0), s.canonical(p))) {
      violation = std::max(violation, 1.0);
    }
    record(r, violation);
  }
  return r;
}

CheckReport check_transform(const Transform& t, std::size_t trials, std::uint64_t seed) {
  CheckReport r;
  r.name = "transform[" + t.to_string() + "]";
  const bool power = t.is_power() || t.kind() == TransformKind::Identity;
  const double alpha = t.kind() == TransformKind::Identity ? 1.0 : t.parameter();
  for (std::size_t k = 0; k < trials; ++k) {
    auto rng = CounterRng::stream(mix_seed({seed, 0x7472616eULL}), k);
    const double x = 1e3 * rng.uniform(), y = 1e3 * rng.uniform();
    const double a = rng.uniform(), big = 1.0 + 10.0 * rng.uniform();
    auto rel = [](double lhs, double rhs) {  // lhs <= rhs with 1e-10 relative slack
      return (lhs - rhs) / (1e-10 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) - 1.0;
    };
    double v = -1.0;
    v = std::max(v, rel(t.dtau(x + y), t.dtau(x) + t.dtau(y)));
    v = std::max(v, rel(t.dtau(x) + t.dtau(y), 2.0 * t.dtau(0.5 * (x + y))));
    v = std::max(v, rel(0.5 * x * t.dtau(x), t.tau(x)));
    v = std::max(v, rel(t.tau(x), x * t.dtau(0.5 * x)));
    v = std::max(v, rel(x * t.dtau(0.5 * x), 4.0 * t.tau(0.5 * x)));
    v = std::max(v, rel(t.tau(x + y), 2.0 * t.tau(x) + 2.0 * t.tau(y)));
    v = std::max(v, rel(t.tau(0.5 * (x + y)), 0.5 * (t.tau(x) + t.tau(y))));
    if (x > 0.0) v = std::max(v, rel(0.5 * x * x * t.ddtau_plus(x), t.tau(x)));
    v = std::max(v, rel(a * t.dtau(x), t.dtau(a * x)));
    v = std::max(v, rel(t.dtau(big * x), big * t.dtau(x)));
    if (power) {
      const double e = alpha - 1.0;
      v = std::max(v, rel(std::pow(x + y, e), std::pow(x, e) + std::pow(y, e)));
      v = std::max(v, rel(std::pow(x, e) + std::pow(y, e), std::pow(2.0, 2.0 - alpha) * std::pow(x + y, e)));
      v = std::max(v, rel(std::abs(std::pow(x, alpha) - std::pow(y, alpha)),
                          std::pow(2.0, 1.0 - alpha) * alpha * std::abs(x - y) * std::pow(x + y, e)));
    }
    record(r, v);
  }
  return r;
}

CheckReport check_variance_inequality(const Space& s, const Transform& t, const std::vector<Point>& sample,
                                      const Point& m_n, std::size_t trials, std::uint64_t seed, double slack) {
  CheckReport r;
  r.name = "variance-inequality[" + t.to_string() + "]";
  std::vector<double> dm(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) dm[i] = s.distance(sample[i], m_n);
  std::vector<double> sorted = dm;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  double chi = sorted[sorted.size() / 2];
  if (!(chi > 0.0)) chi = 1.0;
  const double f_m = objective(s, t, sample, m_n);
  for (std::size_t k = 0; k < trials; ++k) {
    auto rng = CounterRng::stream(mix_seed({seed, 0x76617269ULL}), k);
    const double radius = probe_radius(s, rng, chi);
    const Point q = random_step(s, m_n, radius, seed, k);
    const double dq = s.distance(q, m_n);
    NeumaierSum curv;
    for (double d : dm) curv.add(d + dq > 0.0 ? t.ddtau_plus(d + dq) : 0.0);
    const double rhs = 0.5 * dq * dq * curv.value() / static_cast<double>(dm.size());
    const double lhs = objective(s, t, sample, q) - f_m;
    record(r, (rhs - lhs) / slack - 1.0);
  }
  return r;
}

CheckReport check_median_variance_inequality(const Space& s, const std::vector<Point>& sample,
                                             const Point& m_n, double w, std::size_t trials,
                                             std::uint64_t seed, double slack) {
  CheckReport r;
  r.name = "median-variance-inequality[w=" + format_double(w) + "]";
  const Transform id = Transform::identity();
  std::vector<double> dm(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) dm[i] = s.distance(sample[i], m_n);
  std::vector<double> sorted = dm;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  double chi = sorted[sorted.size() / 2];
  if (!(chi > 0.0)) chi = 1.0;
  const double f_m = objective(s, id, sample, m_n);
  for (std::size_t k = 0; k < trials; ++k) {
    auto rng = CounterRng::stream(mix_seed({seed, 0x6d656469ULL}), k);
    const double radius = probe_radius(s, rng, chi);
    const Point q = random_step(s, m_n, radius, seed, k);
    const double dq = s.distance(q, m_n);
    if (dq == 0.0) continue;
    NeumaierSum acc;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (bowtie_contains(s, m_n, q, w, sample[i])) continue;
      acc.add(1.0 / (dm[i] + dq));
    }
    const double rhs = 0.5 * w * w * dq * dq * acc.value() / static_cast<double>(sample.size());
    const double lhs = objective(s, id, sample, q) - f_m;
    record(r, (rhs - lhs) / slack - 1.0);
  }
  return r;
}

}  // namespace tfm
