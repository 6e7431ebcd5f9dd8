#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tfmean/estimators.hpp"

namespace tfm::testing {

namespace {

template <class F>
double ternary(F f, double lo, double hi) {
  for (int it = 0; it < 400 && hi - lo > 1e-10 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (f(a) <= f(b)) hi = b;
    else lo = a;
  }
  return 0.5 * (lo + hi);
}

Point euclid1(const Space& s, const Transform& t, const std::vector<Point>& sample) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : sample) {
    lo = std::min(lo, std::get<Vector>(p)(0));
    hi = std::max(hi, std::get<Vector>(p)(0));
  }
  auto f = [&](double x) { return objective(s, t, sample, Point(Vector(Vector::Constant(1, x)))); };
  double best = ternary(f, lo, hi);
  // A data point can beat the bracketed optimum by rounding on flat stretches.
  for (const auto& p : sample)
    if (f(std::get<Vector>(p)(0)) < f(best)) best = std::get<Vector>(p)(0);
  return Point(Vector(Vector::Constant(1, best)));
}

Point tree(const Space& s, const Transform& t, const std::vector<Point>& sample) {
  const auto* tr = s.as_tree();
  Point best;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < tr->num_edges(); ++e) {
    auto f = [&](double x) { return objective(s, t, sample, Point(TreePoint{e, x})); };
    const double len = tr->edge(e).length;
    for (double x : {0.0, len, ternary(f, 0.0, len)}) {
      const double v = f(x);
      if (v < best_val) {
        best_val = v;
        best = s.canonical(Point(TreePoint{e, x}));
      }
    }
  }
  return best;
}

Point euclid2(const Space& s, const Transform& t, const std::vector<Point>& sample) {
  std::vector<Vector> cand;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Vector& a = std::get<Vector>(sample[i]);
    cand.push_back(a);
    for (std::size_t j = i + 1; j < sample.size(); ++j) cand.push_back(0.5 * (a + std::get<Vector>(sample[j])));
  }
  auto f = [&](const Vector& x) { return objective(s, t, sample, Point(x)); };
  Vector best = cand.front();
  double best_val = f(best), diam = 0.0;
  for (const auto& c : cand) {
    const double v = f(c);
    if (v < best_val) {
      best_val = v;
      best = c;
    }
    for (const auto& p : sample) diam = std::max(diam, (std::get<Vector>(p) - c).norm());
  }
  constexpr int kHalf = 10;
  double h = std::max(diam, 1e-12) / kHalf;
  for (int round = 0; round <= 40; ++round) {  // initial grid + 40 halvings
    const Vector center = best;
    for (int i = -kHalf; i <= kHalf; ++i) {
      for (int j = -kHalf; j <= kHalf; ++j) {
        Vector x = center;
        x(0) += i * h;
        x(1) += j * h;
        const double v = f(x);
        if (v < best_val) {
          best_val = v;
          best = x;
        }
      }
    }
    h /= 2.0;
  }
  return Point(best);
}

}  // namespace

Point oracle_minimize(const Space& s, const Transform& t, const std::vector<Point>& sample) {
  if (sample.empty() || sample.size() > 16) throw UnsupportedOracleError("oracle needs 1 <= n <= 16");
  if (s.as_tree()) return tree(s, t, sample);
  if (s.as_euclidean() && s.dim() == 1) return euclid1(s, t, sample);
  if (s.as_euclidean() && s.dim() == 2) return euclid2(s, t, sample);
  throw UnsupportedOracleError("oracle supports euclidean:1, euclidean:2 and trees");
}

}  // namespace tfm::testing
