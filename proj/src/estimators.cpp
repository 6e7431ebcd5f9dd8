#include "tfmean/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tfmean/numeric.hpp"
#include "tfmean/rng.hpp"

namespace tfm {

namespace {

constexpr std::size_t kCertificateProbes = 32;
constexpr std::size_t kAnchorCandidates = 8;
constexpr double kCertificateSlack = 1e-9;

double checked(double f) {
  if (!std::isfinite(f)) throw NumericError("objective is not finite");
  return f;
}

struct State {
  Point x;
  double f = 0.0;
  std::size_t epochs = 0;
  double step = std::numeric_limits<double>::infinity();
  bool stalled = false;  // criterion (a) met at the last epoch
};

bool first_order_certificate(const Space& s, const Transform& t, const std::vector<Point>& sample,
                             const Point& x, double fx, const SolverConfig& cfg) {
  const double move = 10.0 * cfg.tol_step;
  auto rng = CounterRng(mix_seed({cfg.shuffle_seed, 0x63657274ULL}));
  const std::size_t probes = std::min(kCertificateProbes, sample.size());
  for (std::size_t k = 0; k < probes; ++k) {
    const auto& y = sample[probes == sample.size() ? k : rng.below(sample.size())];
    const double len = s.distance(x, y);
    if (len == 0.0) continue;
    const Point q = s.geodesic_point(x, y, std::min(1.0, move / len));
    if (objective(s, t, sample, q) < fx - kCertificateSlack * std::abs(fx)) return false;
  }
  return true;
}

bool criterion_a(double f_prev, double f, double step, const SolverConfig& cfg) {
  const double rel = (f_prev - f) / std::max(std::abs(f_prev), std::numeric_limits<double>::min());
  return rel < cfg.tol_obj && step < cfg.tol_step;
}

// ---------------------------------------------------------------- Weiszfeld

std::vector<std::size_t> canonical_order(const Space& s, const std::vector<Point>& sample) {
  std::vector<std::size_t> idx(sample.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto entries_less = [](const double* a, const double* b, Eigen::Index n) {
    return std::lexicographical_compare(a, a + n, b, b + n);
  };
  if (s.as_tree()) {
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) {
      const auto& a = std::get<TreePoint>(sample[i]);
      const auto& b = std::get<TreePoint>(sample[j]);
      return std::tie(a.edge, a.offset) < std::tie(b.edge, b.offset);
    });
  } else if (s.as_spd()) {
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) {
      const auto& a = std::get<Matrix>(sample[i]);
      const auto& b = std::get<Matrix>(sample[j]);
      return entries_less(a.data(), b.data(), a.size());
    });
  } else {
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) {
      const auto& a = std::get<Vector>(sample[i]);
      const auto& b = std::get<Vector>(sample[j]);
      return entries_less(a.data(), b.data(), a.size());
    });
  }
  return idx;
}

constexpr double kMaxOverrelax = 1024.0;

// (root exp(k v) root)^(-1/2) for the point k v along the whitened tangent v.
Matrix root_inverse_along(const Matrix& root, const Matrix& v, double k) {
  const Matrix p = symmetrize(root * sym_exp(symmetrize(Matrix(k * v))) * root);
  return sym_apply(jacobi_eigen(p), [](double e) { return 1.0 / std::sqrt(e); });
}

State weiszfeld_euclidean(const Space& s, const Transform& t, const std::vector<Point>& sample,
                          const Vector* start, const SolverConfig& cfg) {
  const auto order = canonical_order(s, sample);
  const auto n = static_cast<Eigen::Index>(sample.size());
  const int d = s.dim();
  Matrix y(d, n);
  for (Eigen::Index i = 0; i < n; ++i) y.col(i) = std::get<Vector>(sample[order[i]]);

  Vector x(d);
  if (start) {
    x = *start;
  } else {
    std::vector<double> col(n);
    for (int k = 0; k < d; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) col[i] = y(k, i);
      std::sort(col.begin(), col.end());
      x(k) = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    }
  }
  const double tau0 = t.dtau(0.0);

  State st;
  Vector dist(n);
  Vector best_x = x;
  double best_f = std::numeric_limits<double>::infinity();
  double f_prev = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs + 1; ++epoch) {
    NeumaierSum fs;
    for (Eigen::Index i = 0; i < n; ++i) {
      dist(i) = (y.col(i) - x).norm();
      fs.add(t.tau(dist(i)));
    }
    const double f = checked(fs.value() / static_cast<double>(n));
    if (f <= best_f) {
      best_f = f;
      best_x = x;
    }
    if (epoch > 1 && criterion_a(f_prev, f, st.step, cfg)) {
      st.stalled = true;
      break;
    }
    if (epoch == cfg.max_epochs + 1) break;
    st.epochs = epoch;

    double sumw = 0.0;
    std::size_t coincident = 0;
    Vector num = Vector::Zero(d);
    Vector pull = Vector::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dist(i) <= cfg.weiszfeld_floor) {
        ++coincident;
        continue;
      }
      const double w = t.dtau(dist(i)) / dist(i);
      sumw += w;
      num += w * y.col(i);
      pull += w * (y.col(i) - x);
    }
    Vector next = x;
    if (sumw > 0.0) {
      const Vector target = num / sumw;
      if (coincident == 0) {
        next = target;
      } else {
        const double eta = static_cast<double>(coincident) * tau0;
        const double r = pull.norm();
        if (r > eta) next = (1.0 - eta / r) * target + (eta / r) * x;
      }
    }
    if (next != x) {
      // Step doubling along the Weiszfeld direction while the objective keeps
      // falling. Flat valleys between clusters otherwise take thousands of epochs.
      auto f_at = [&](const Vector& p) {
        NeumaierSum a;
        for (Eigen::Index i = 0; i < n; ++i) a.add(t.tau((y.col(i) - p).norm()));
        return a.value() / static_cast<double>(n);
      };
      const Vector delta = next - x;
      double f_next = f_at(next);
      for (double k = 2.0; k <= kMaxOverrelax; k *= 2.0) {
        const Vector cand = x + k * delta;
        const double fc = f_at(cand);
        if (!(fc < f_next)) break;
        next = cand;
        f_next = fc;
      }
    }
    st.step = (next - x).norm();
    f_prev = f;
    x = next;
  }
  st.x = best_x;
  st.f = best_f;
  return st;
}

State weiszfeld_spd(const Space& s, const Transform& t, const std::vector<Point>& sample,
                    const Matrix* start, const SolverConfig& cfg) {
  const auto order = canonical_order(s, sample);
  const std::size_t n = sample.size();
  const int d = s.dim();
  std::vector<Matrix> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::get<Matrix>(sample[order[i]]);

  Matrix x;
  if (start) {
    x = *start;
  } else {
    Matrix acc = Matrix::Zero(d, d);
    for (const auto& m : y) acc += sym_log(m);
    x = sym_exp(symmetrize(acc / static_cast<double>(n)));
  }
  const double tau0 = t.dtau(0.0);

  State st;
  std::vector<Matrix> logs(n);
  std::vector<double> dist(n);
  Matrix best_x = x;
  double best_f = std::numeric_limits<double>::infinity();
  double f_prev = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs + 1; ++epoch) {
    const auto ex = jacobi_eigen(x);
    const Matrix root = sym_apply(ex, [](double v) { return std::sqrt(v); });
    const Matrix inv_root = sym_apply(ex, [](double v) { return 1.0 / std::sqrt(v); });
    NeumaierSum fs;
    for (std::size_t i = 0; i < n; ++i) {
      logs[i] = SpdSpace::whitened_log(inv_root, y[i]);
      dist[i] = logs[i].norm();
      fs.add(t.tau(dist[i]));
    }
    const double f = checked(fs.value() / static_cast<double>(n));
    if (f <= best_f) {
      best_f = f;
      best_x = x;
    }
    if (epoch > 1 && criterion_a(f_prev, f, st.step, cfg)) {
      st.stalled = true;
      break;
    }
    if (epoch == cfg.max_epochs + 1) break;
    st.epochs = epoch;

    double sumw = 0.0;
    std::size_t coincident = 0;
    Matrix pull = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] <= cfg.weiszfeld_floor) {
        ++coincident;
        continue;
      }
      const double w = t.dtau(dist[i]) / dist[i];
      sumw += w;
      pull += w * logs[i];
    }
    Matrix tangent = Matrix::Zero(d, d);
    if (sumw > 0.0) {
      tangent = pull / sumw;
      if (coincident > 0) {
        const double eta = static_cast<double>(coincident) * tau0;
        const double r = pull.norm();
        tangent *= r > eta ? 1.0 - eta / r : 0.0;
      }
    }
    if (tangent.norm() > 0.0) {
      // Step doubling along the geodesic, as in the Euclidean case.
      auto f_at = [&](double k) {
        const Matrix cand_inv_root = root_inverse_along(root, tangent, k);
        NeumaierSum a;
        for (std::size_t i = 0; i < n; ++i) a.add(t.tau(SpdSpace::whitened_log(cand_inv_root, y[i]).norm()));
        return a.value() / static_cast<double>(n);
      };
      double scale = 1.0;
      double f_next = f_at(1.0);
      for (double k = 2.0; k <= kMaxOverrelax; k *= 2.0) {
        const double fc = f_at(k);
        if (!(fc < f_next)) break;
        scale = k;
        f_next = fc;
      }
      tangent *= scale;
    }
    st.step = tangent.norm();
    f_prev = f;
    if (st.step > 0.0) x = symmetrize(root * sym_exp(symmetrize(tangent)) * root);
  }
  st.x = best_x;
  st.f = best_f;
  return st;
}

// ---------------------------------------------------------------- cyclic prox

State cyclic_prox(const Space& s, const Transform& t, const std::vector<Point>& sample,
                  std::size_t epochs, const SolverConfig& cfg) {
  State st;
  Point x = s.canonical(sample.front());
  double f_prev = objective(s, t, sample, x);
  std::vector<std::size_t> order(sample.size());
  for (std::size_t k = 1; k <= epochs; ++k) {
    std::iota(order.begin(), order.end(), 0);
    auto rng = CounterRng(mix_seed({cfg.shuffle_seed, 0x70726f78ULL, k}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const double lambda = cfg.prox_lambda0 / static_cast<double>(k);
    const Point start = x;
    for (auto i : order) {
      const double d = s.distance(x, sample[i]);
      if (d == 0.0) continue;
      const double step = prox_step(t, d, lambda);
      if (step > 0.0) x = s.geodesic_point(x, sample[i], std::min(1.0, step / d));
    }
    st.epochs = k;
    st.step = s.distance(start, x);
    const double f = checked(objective(s, t, sample, x));
    const bool done = criterion_a(f_prev, f, st.step, cfg);
    f_prev = f;
    if (done) break;
  }
  st.x = x;
  st.f = f_prev;
  return st;
}

// Exact minimization over a metric tree: derivative bisection along the
// current edge, then descent from vertex to vertex along the unique edge
// with a negative one-sided derivative. Convexity along geodesics makes a
// vertex without descent edges, or an interior edge minimum, global.
State tree_polish(const Space& s, const Transform& t, const std::vector<Point>& sample,
                  const TreePoint& start) {
  const auto* tree = s.as_tree();
  auto f_at = [&](const TreePoint& p) { return objective(s, t, sample, p); };
  auto on_edge = [&](std::size_t e, std::size_t from, double off) {
    const auto& ed = tree->edge(e);
    return tree->canonical({e, ed.u == from ? off : ed.length - off});
  };
  // Returns (offset from `from`, value) of the minimum over the closed edge.
  // Bisection on the one-sided derivatives along the edge, which resolves
  // the minimizer to rounding rather than to the square root of it.
  auto edge_min = [&](std::size_t e, std::size_t from) {
    const auto& ed = tree->edge(e);
    const double len = ed.length;
    const TreePoint pf = tree->vertex_point(from), pw = tree->vertex_point(ed.u == from ? ed.v : ed.u);
    enum Where { Behind, Ahead, OnEdge };
    struct Rel {
      Where where;
      double base;  // d(from, y), d(w, y) or the offset of y from `from`
    };
    std::vector<Rel> rel;
    rel.reserve(sample.size());
    for (const auto& p : sample) {
      const auto& y = std::get<TreePoint>(p);
      if (y.edge == e) {
        rel.push_back({OnEdge, ed.u == from ? y.offset : len - y.offset});
      } else {
        const double a = tree->distance(pf, y), b = tree->distance(pw, y);
        rel.push_back(b < a ? Rel{Ahead, b} : Rel{Behind, a});
      }
    }
    // right (dir = +1) or left (dir = -1) derivative of the objective in the offset
    auto slope = [&](double x, int dir) {
      NeumaierSum g;
      for (const auto& r : rel) {
        switch (r.where) {
          case Behind: g.add(t.dtau(r.base + x)); break;
          case Ahead: g.add(-t.dtau(r.base + len - x)); break;
          case OnEdge: {
            const bool ahead = dir > 0 ? r.base > x : r.base >= x;
            const double d = std::abs(x - r.base);
            g.add(ahead ? -t.dtau(d) : t.dtau(d));
            break;
          }
        }
      }
      return g.value();
    };
    double x;
    if (slope(0.0, 1) >= 0.0) {
      x = 0.0;
    } else if (slope(len, -1) <= 0.0) {
      x = len;
    } else {
      double lo = 0.0, hi = len;
      x = 0.5 * (lo + hi);
      while (x > lo && x < hi) {
        if (slope(x, 1) < 0.0) {
          lo = x;
        } else if (slope(x, -1) > 0.0) {
          hi = x;
        } else {
          break;
        }
        x = 0.5 * (lo + hi);
      }
    }
    return std::pair{x, f_at(on_edge(e, from, x))};
  };
  auto descent_rate = [&](std::size_t v, std::size_t e) {
    const auto& ed = tree->edge(e);
    const auto w = ed.u == v ? ed.v : ed.u;
    const TreePoint pv = tree->vertex_point(v), pw = tree->vertex_point(w);
    NeumaierSum sum, scale;
    for (const auto& p : sample) {
      const auto& y = std::get<TreePoint>(p);
      const double dv = tree->distance(pv, y);
      const double slope = t.dtau(dv);
      scale.add(slope);
      if (dv == 0.0) {
        sum.add(slope);
        continue;
      }
      const bool inside = y.edge == e || tree->distance(pw, y) < dv;
      sum.add(inside ? -slope : slope);
    }
    return std::pair{sum.value(), scale.value()};
  };

  const auto& e0 = tree->edge(start.edge);
  auto [off, fbest] = edge_min(start.edge, e0.u);
  TreePoint x = on_edge(start.edge, e0.u, off);
  std::size_t came_from = start.edge;
  std::size_t guard = 0;
  while (guard++ <= tree->num_edges()) {
    const auto& ed = tree->edge(came_from);
    std::size_t v;
    if (x == tree->vertex_point(ed.u)) {
      v = ed.u;
    } else if (x == tree->vertex_point(ed.v)) {
      v = ed.v;
    } else {
      break;  // interior edge minimum
    }
    std::size_t best_e = came_from;
    double best_rate = 0.0;
    for (std::size_t e = 0; e < tree->num_edges(); ++e) {
      const auto& c = tree->edge(e);
      if (e == came_from || (c.u != v && c.v != v)) continue;
      const auto [rate, scale] = descent_rate(v, e);
      if (rate < -1e-12 * (scale + 1e-300) && rate < best_rate) {
        best_rate = rate;
        best_e = e;
      }
    }
    if (best_e == came_from) break;
    auto [o2, f2] = edge_min(best_e, v);
    if (!(o2 > 0.0) || f2 > fbest) break;
    fbest = f2;
    x = on_edge(best_e, v, o2);
    came_from = best_e;
  }
  State st;
  st.x = x;
  st.f = fbest;
  st.stalled = true;
  return st;
}

void anchor_check(const Space& s, const Transform& t, const std::vector<Point>& sample, State& st) {
  std::vector<std::pair<double, std::size_t>> near(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) near[i] = {s.distance(st.x, sample[i]), i};
  const std::size_t k = std::min(kAnchorCandidates, near.size());
  std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k), near.end());
  for (std::size_t j = 0; j < k; ++j) {
    const auto& y = sample[near[j].second];
    const double fy = objective(s, t, sample, y);
    if (fy < st.f) {
      st.f = fy;
      st.x = s.canonical(y);
    }
  }
}

}  // namespace

std::string_view to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::Weiszfeld: return "weiszfeld";
    case SolverMethod::CyclicProx: return "cyclic_prox";
    case SolverMethod::Auto: return "auto";
  }
  return "?";
}

SolverMethod parse_solver_method(std::string_view s) {
  if (s == "weiszfeld") return SolverMethod::Weiszfeld;
  if (s == "cyclic_prox" || s == "cyclic-prox") return SolverMethod::CyclicProx;
  if (s == "auto") return SolverMethod::Auto;
  throw ConfigError("unknown solver method '" + std::string(s) + "'");
}

void SolverConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(tol_obj > 0.0) || !(tol_step > 0.0) || !(prox_lambda0 > 0.0) || !(weiszfeld_floor > 0.0)) {
    throw ConfigError("solver tolerances and step sizes must be positive");
  }
}

double objective(const Space& s, const Transform& t, const std::vector<Point>& sample, const Point& q) {
  if (sample.empty()) throw DomainError("objective of an empty sample");
  NeumaierSum sum;
  for (const auto& y : sample) sum.add(t.tau(s.distance(y, q)));
  return checked(sum.value() / static_cast<double>(sample.size()));
}

double prox_step(const Transform& t, double d, double lambda) {
  if (!(d >= 0.0)) throw DomainError("prox_step distance must be nonnegative");
  if (!(lambda > 0.0)) throw DomainError("prox_step lambda must be positive");
  if (d == 0.0) return 0.0;
  switch (t.kind()) {
    case TransformKind::Identity: return std::min(lambda, d);
    case TransformKind::Power:
      if (t.parameter() == 2.0) return 2.0 * lambda * d / (1.0 + 2.0 * lambda);
      break;
    case TransformKind::Huber: {
      const double k = t.parameter();
      const double linear = 2.0 * k * lambda;
      if (d - linear >= k) return linear;
      return 2.0 * lambda * d / (1.0 + 2.0 * lambda);
    }
    default: break;
  }
  // tau'(d - s) - s / lambda is decreasing in s.
  if (t.dtau(0.0) - d / lambda >= 0.0) return d;
  double lo = 0.0, hi = d;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * d; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t.dtau(d - mid) - mid / lambda > 0.0 ? lo : hi) = mid;
  }
  return std::clamp(0.5 * (lo + hi), 0.0, d);
}

EstimateResult estimate(const Space& s, const Transform& t, const std::vector<Point>& sample,
                        const SolverConfig& cfg) {
  cfg.validate();
  if (sample.empty()) throw DomainError("estimate of an empty sample");
  for (const auto& p : sample) s.validate(p);

  SolverMethod method = cfg.method;
  if (method == SolverMethod::Auto) {
    method = s.as_tree() ? SolverMethod::CyclicProx : SolverMethod::Weiszfeld;
  }
  if (method == SolverMethod::Weiszfeld && s.as_tree()) {
    throw ConfigError("weiszfeld is not available on metric trees");
  }

  State st;
  std::size_t extra_epochs = 0;
  if (method == SolverMethod::Weiszfeld) {
    st = s.as_spd() ? weiszfeld_spd(s, t, sample, nullptr, cfg)
                    : weiszfeld_euclidean(s, t, sample, nullptr, cfg);
  } else {
    const std::size_t warm = std::max<std::size_t>(1, cfg.max_epochs / 10);
    const State prox = cyclic_prox(s, t, sample, warm, cfg);
    extra_epochs = prox.epochs;
    if (s.as_tree()) {
      st = tree_polish(s, t, sample, std::get<TreePoint>(prox.x));
      st.step = 0.0;
    } else if (s.as_spd()) {
      const auto& m = std::get<Matrix>(prox.x);
      st = weiszfeld_spd(s, t, sample, &m, cfg);
    } else {
      const auto& v = std::get<Vector>(prox.x);
      st = weiszfeld_euclidean(s, t, sample, &v, cfg);
    }
    if (prox.f < st.f) {
      st.x = prox.x;
      st.f = prox.f;
    }
  }
  anchor_check(s, t, sample, st);

  EstimateResult r;
  r.point = s.canonical(st.x);
  r.objective = objective(s, t, sample, r.point);
  r.epochs_used = st.epochs + extra_epochs;
  r.final_step = std::isfinite(st.step) ? st.step : 0.0;
  r.method = method;
  r.converged = st.stalled && first_order_certificate(s, t, sample, r.point, r.objective, cfg);
  return r;
}

std::vector<EstimateResult> replace_one_estimates(const Space& s, const Transform& t,
                                                  const std::vector<Point>& sample,
                                                  const std::vector<Point>& fresh,
                                                  const SolverConfig& cfg) {
  if (fresh.size() != sample.size()) throw ShapeError("fresh sample length differs from sample length");
  std::vector<EstimateResult> out;
  out.reserve(sample.size());
  std::vector<Point> work = sample;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    work[i] = fresh[i];
    out.push_back(estimate(s, t, work, cfg));
    work[i] = sample[i];
  }
  return out;
}

}  // namespace tfm
