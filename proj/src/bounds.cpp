#include "tfmean/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "tfmean/numeric.hpp"
#include "tfmean/rng.hpp"
#include "tfmean/sampling.hpp"

namespace tfm {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
}

void require_n(double n) {
  if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("sample size must be >= 1");
}

ExtReal ext_pow(ExtReal x, double e) {
  if (x.is_infinite()) {
    if (e > 0.0) return ExtReal::infinity();
    if (e == 0.0) return 1.0;
    return 0.0;
  }
  return ExtReal::from_double(std::pow(x.value(), e));
}

ExtReal ext_div(ExtReal x, double d) {
  if (x.is_infinite()) return ExtReal::infinity();
  return ExtReal::from_double(x.value() / d);
}

}  // namespace

// ---------------------------------------------------------------- losses

double power_loss(double alpha, double chi, double dist) {
  require_alpha(alpha);
  if (!(chi > 0.0)) throw DomainError("chi must be positive");
  if (!(dist >= 0.0)) throw DomainError("distance must be nonnegative");
  return std::min(std::pow(chi, alpha - 2.0) * dist * dist, std::pow(dist, alpha));
}

double general_loss(const Transform& t, double chi, double dist) {
  if (t.classify() == Robustness::Median) throw InapplicableError("use median_loss for the identity transform");
  if (!(chi > 0.0)) throw DomainError("chi must be positive");
  if (!(dist >= 0.0)) throw DomainError("distance must be nonnegative");
  if (dist == 0.0) return 0.0;
  return dist * dist * std::min(t.ddtau_plus(2.0 * chi), t.ddtau_plus(2.0 * dist));
}

double median_loss(double dist) {
  if (!(dist >= 0.0)) throw DomainError("distance must be nonnegative");
  return std::min(dist, dist * dist);
}

// ---------------------------------------------------------------- moments

std::string_view to_string(Provenance p) { return p == Provenance::Analytic ? "analytic" : "plugin"; }

void MomentSet::set_power(double a, ExtReal v, Provenance p, std::size_t n) {
  for (auto& [k, e] : powers_) {
    if (std::abs(k - a) <= 1e-12) {
      e = {v, p, n};
      return;
    }
  }
  powers_.push_back({a, {v, p, n}});
  std::sort(powers_.begin(), powers_.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
}

void MomentSet::set(std::string_view tag, ExtReal v, Provenance p, std::size_t n) {
  named_.insert_or_assign(std::string(tag), MomentEntry{v, p, n});
}

bool MomentSet::has_power(double a) const {
  return std::any_of(powers_.begin(), powers_.end(), [&](const auto& e) { return std::abs(e.first - a) <= 1e-12; });
}

bool MomentSet::has(std::string_view tag) const { return named_.find(tag) != named_.end(); }

const MomentEntry& MomentSet::power_entry(double a) const {
  for (const auto& [k, e] : powers_) {
    if (std::abs(k - a) <= 1e-12) return e;
  }
  throw MissingMomentError(power_tag(a));
}

const MomentEntry& MomentSet::entry(std::string_view tag) const {
  const auto it = named_.find(tag);
  if (it == named_.end()) throw MissingMomentError(std::string(tag));
  return it->second;
}

ExtReal MomentSet::power(double a) const { return power_entry(a).value; }
ExtReal MomentSet::get(std::string_view tag) const { return entry(tag).value; }

std::string MomentSet::power_tag(double a) { return "sigma_" + format_double(a); }

std::vector<std::pair<std::string, MomentEntry>> MomentSet::entries() const {
  std::vector<std::pair<std::string, MomentEntry>> out;
  for (const auto& [k, e] : powers_) out.emplace_back(power_tag(k), e);
  for (const auto& [k, e] : named_) out.emplace_back(k, e);
  return out;
}

// ---------------------------------------------------------------- power rate

PowerRateConstants power_rate_constants(double alpha) {
  require_alpha(alpha);
  const double am1 = alpha - 1.0;
  const double a2 = alpha * alpha;
  const double apow = std::pow(alpha, (2.0 - alpha) / am1);
  if (alpha >= 1.5) {
    return {std::pow(2.0, 6.0 - alpha) / (am1 * am1),
            3.0 * std::pow(2.0, (5.0 - 5.0 * alpha + a2) / am1) *
                    (1.0 + std::pow(2.0, (3.0 - 2.0 * alpha) / am1)) * apow +
                0.5,
            3.0 * std::pow(2.0, (6.0 - 6.0 * alpha + a2) / am1) * apow + 0.25};
  }
  return {std::pow(2.0, 9.0 - 3.0 * alpha) / (am1 * am1),
          3.0 * std::pow(2.0, (9.0 - 8.0 * alpha + a2) / am1) *
                  (1.0 + std::pow(2.0, (2.0 - alpha) / am1) + std::pow(2.0, (3.0 - 2.0 * alpha) / am1)) * apow +
              0.5,
          3.0 * std::pow(2.0, (12.0 - 10.0 * alpha + a2) / am1) * apow + 0.25};
}

std::vector<double> power_rate_moment_exponents(double alpha) {
  require_alpha(alpha);
  if (alpha >= 1.5) return {alpha - 1.0, 2.0 * alpha - 2.0, alpha};
  return {2.0 - alpha, 2.0 * alpha - 2.0, alpha};
}

ExtReal power_rate_constant(double alpha, const MomentSet& moments, double n) {
  require_alpha(alpha);
  require_n(n);
  const auto c = power_rate_constants(alpha);
  const double am1 = alpha - 1.0;
  ExtReal m1, m2 = moments.power(alpha);
  double e;
  if (alpha >= 1.5) {
    e = (2.0 - alpha) / am1;
    m1 = ext_pow(moments.power(alpha - 1.0), e) * moments.power(2.0 * alpha - 2.0);
  } else {
    e = 1.0;
    m1 = moments.power(2.0 - alpha) * moments.power(2.0 * alpha - 2.0);
  }
  const ExtReal inner = ExtReal(c.c1) * m1 + ExtReal(c.c2 * std::pow(n, -e)) * m2;
  return ExtReal(c.c0 / n) * inner;
}

ExtReal threehalfs_bound(ExtReal sigma_half, ExtReal sigma_one, ExtReal sigma_threehalfs, double n) {
  require_n(n);
  const ExtReal inner = ExtReal(7.0) * sigma_half * sigma_one + ExtReal(2.0 / n) * sigma_threehalfs;
  return ExtReal(91.0 / n) * inner;
}

// ---------------------------------------------------------------- general rate

double general_rate_g(const Transform& t, double x) {
  if (!(x >= 0.0)) throw DomainError("g argument must be nonnegative");
  return 1.0 / t.ddtau_plus(std::max(7.0 * x, 1e-300));
}

double general_rate_h(const Transform& t, double x) { return general_rate_g(t, t.inv_dtau(12.0 * x)); }

GeneralRateTerms general_rate_terms(const Transform& t, const MomentSet& m, double n, double p) {
  if (t.classify() != Robustness::TailRobust) {
    throw InapplicableError("the explicit general rate needs an unbounded slope (tail-robust transform)");
  }
  if (!(p > 1.0)) throw DomainError("p must exceed 1");
  require_n(n);
  using Tags = GeneralRateTags;
  GeneralRateTerms r;
  r.p = p;
  r.q = p / (p - 1.0);
  r.g_fn = [t](double x) { return general_rate_g(t, x); };
  r.h_fn = [t](double x) { return general_rate_h(t, x); };

  const ExtReal s_dtau = m.get(MomentSet::kSigmaDtau);
  const ExtReal s_dtau2 = m.get(MomentSet::kSigmaDtau2);
  const double chi = m.get(MomentSet::kChi).value();

  auto h_of = [&](ExtReal x, double power) -> ExtReal {
    if (x.is_infinite()) return ExtReal::infinity();
    return ExtReal::from_double(std::pow(general_rate_h(t, x.value()), power));
  };
  r.S_1 = max(max(m.get(Tags::kSigmaG), ExtReal(2.0) * h_of(s_dtau, 1.0)), m.get(Tags::kHHat));
  r.S_p = max(max(m.get(Tags::kSigmaGp), ExtReal(2.0) * h_of(s_dtau, p)), m.get(Tags::kHHatP));
  r.V_n1 = ExtReal(1.0 / n) * m.get(Tags::kDtauG) + m.get(Tags::kDtauH);
  r.V_np = ExtReal(1.0 / n) * m.get(Tags::kDtauGp) + m.get(Tags::kDtauHp);

  r.r0 = s_dtau.is_infinite() ? ExtReal::infinity()
                              : ExtReal(std::max(chi, 2.0 * t.inv_dtau(16.0 * s_dtau.value())));

  ExtReal cheb;
  if (s_dtau2.is_infinite() || s_dtau.is_infinite()) {
    cheb = ExtReal::infinity();
  } else {
    const double ratio = s_dtau.value() > 0.0 ? s_dtau2.value() / (s_dtau.value() * s_dtau.value()) : 1.0;
    cheb = std::exp(-n / 16.0) + (2.0 / n) * std::max(0.0, ratio - 1.0);
  }
  r.b_n = ext_pow(r.V_np + ExtReal(4.0) * m.get(Tags::kSigmaDtau2p) * r.S_p, 1.0 / p) * ext_pow(cheb, 1.0 / r.q);

  const ExtReal first = ExtReal(4.0) * s_dtau2 * r.S_1 + r.V_n1;
  ExtReal second;
  if (r.r0.is_infinite()) {
    second = ExtReal::infinity();
  } else {
    second = ext_div(ExtReal(4.0) * s_dtau2, t.ddtau_plus(4.0 * r.r0.value())) + r.b_n;
  }
  r.bound = ExtReal(64.0 / n) * min(first, second);
  return r;
}

MomentSet general_rate_moments(const DistributionSpec& dist, const Transform& t, double n, double p,
                               std::size_t draws, std::size_t outer, std::uint64_t seed) {
  if (t.classify() != Robustness::TailRobust) {
    throw InapplicableError("the explicit general rate needs an unbounded slope (tail-robust transform)");
  }
  using Tags = GeneralRateTags;
  const auto& space = dist.space();
  const auto& c = dist.center();
  NeumaierSum s1, s2, s2p, sg, sgp, dg, dgp, dh, dhp;
  std::vector<double> radii(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const double d = space.distance(dist.draw(seed, i), c);
    radii[i] = d;
    const double dt = t.dtau(d);
    const double g = general_rate_g(t, d);
    const double h = general_rate_h(t, 2.0 * dt / n);
    s1.add(dt);
    s2.add(dt * dt);
    s2p.add(std::pow(dt, 2.0 * p));
    sg.add(g);
    sgp.add(std::pow(g, p));
    dg.add(dt * dt * g);
    dgp.add(std::pow(dt, 2.0 * p) * std::pow(g, p));
    dh.add(dt * dt * h);
    dhp.add(std::pow(dt, 2.0 * p) * std::pow(h, p));
  }
  const auto N = static_cast<double>(draws);
  MomentSet m;
  auto put = [&](std::string_view tag, double v) { m.set(tag, ExtReal::from_double(v), Provenance::Plugin, draws); };
  put(MomentSet::kSigmaDtau, s1.value() / N);
  put(MomentSet::kSigmaDtau2, s2.value() / N);
  put(Tags::kSigmaDtau2p, s2p.value() / N);
  put(Tags::kSigmaG, sg.value() / N);
  put(Tags::kSigmaGp, sgp.value() / N);
  put(Tags::kDtauG, dg.value() / N);
  put(Tags::kDtauGp, dgp.value() / N);
  put(Tags::kDtauH, dh.value() / N);
  put(Tags::kDtauHp, dhp.value() / N);

  bool estimated = true;
  const double chi = radius_median(dist, &estimated, draws, seed);
  m.set(MomentSet::kChi, chi, estimated ? Provenance::Plugin : Provenance::Analytic, estimated ? draws : 0);

  // Outer Monte Carlo over empirical means of tau'(d) at sample size n.
  const auto nn = static_cast<std::size_t>(n);
  NeumaierSum hh, hhp;
  for (std::size_t k = 0; k < outer; ++k) {
    const auto sub = mix_seed({seed, 0x6f75746572ULL, k});
    NeumaierSum mean;
    for (std::size_t j = 0; j < nn; ++j) mean.add(t.dtau(space.distance(dist.draw(sub, j), c)));
    const double h = general_rate_h(t, 2.0 * mean.value() / static_cast<double>(nn));
    hh.add(h);
    hhp.add(std::pow(h, p));
  }
  m.set(Tags::kHHat, ExtReal::from_double(hh.value() / static_cast<double>(outer)), Provenance::Plugin, outer);
  m.set(Tags::kHHatP, ExtReal::from_double(hhp.value() / static_cast<double>(outer)), Provenance::Plugin, outer);
  return m;
}

// ---------------------------------------------------------------- deviation

double location_x0(double rho, double delta, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in (0, 1]");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho must lie in (0, 1]");
  if (!(delta >= 0.0)) throw DomainError("delta must be nonnegative");
  if (!(rho > 1.0 / (1.0 + lambda))) throw InapplicableError("location bound needs rho > 1/(1+lambda)");
  const double a = (1.0 - rho) / rho;
  return delta / (lambda - a) * (a + lambda * std::sqrt(1.0 - lambda * lambda + a * a)) / (a + lambda);
}

double deterministic_location_bound(double rho, double delta, double lambda, double R) {
  if (!(R > 0.0)) throw DomainError("R must be positive");
  const double x0 = location_x0(rho, delta, lambda);
  return std::max(x0 * x0, R * R - delta * delta);
}

double median_location_radius(double rho, double delta) {
  if (!(rho > 0.5 && rho <= 1.0)) throw InapplicableError("median location bound needs rho > 1/2");
  return 2.0 * rho * delta * (1.0 - rho) / (2.0 * rho - 1.0);
}

namespace {

double deviation_probability(double eta, double rho, double n) {
  if (rho >= 1.0) return eta < 1.0 ? 0.0 : std::pow(2.0, n);
  return std::exp(n * (std::log(2.0) + (1.0 - eta) * std::log1p(-rho)));
}

void check_common(double eta, double rho, double r, double n) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InapplicableError("eta must lie in [0, 1]");
  if (!(rho > 0.0 && rho <= 1.0)) throw InapplicableError("rho must lie in (0, 1]");
  if (!(r > 0.0)) throw DomainError("r must be positive");
  require_n(n);
}

}  // namespace

TailBound tail_bound(double lambda, double eta, double rho, double r, double n) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InapplicableError("lambda must lie in (0, 1]");
  check_common(eta, rho, r, n);
  const double base = (1.0 + lambda) * eta * rho;
  if (!(base > 1.0)) throw InapplicableError("tail bound needs (lambda + 1) eta rho > 1");
  return {((3.0 + lambda) * eta * rho - 1.0) / (base - 1.0), deviation_probability(eta, rho, n)};
}

TailBound median_tail_bound(double eta, double rho, double r, double n) {
  check_common(eta, rho, r, n);
  const double er = eta * rho;
  if (!(2.0 * er > 1.0)) throw InapplicableError("median tail bound needs 2 eta rho > 1");
  return {(6.0 * er - 1.0 - 4.0 * er * er) / (2.0 * er - 1.0), deviation_probability(eta, rho, n)};
}

bool tail_radius_condition(const Transform& t, double lambda, double r) {
  if (t.slope_sup().is_infinite()) throw InapplicableError("tail bound needs a bounded slope");
  const double R = minimal_linear_radius(t, lambda);
  if (R == 0.0) return true;
  // Evaluate the condition at R itself, as the theorem requires.
  return t.tau(R) >= lambda * t.slope_sup().value() * R * (1.0 - 1e-12) && r >= R / 2.0;
}

}  // namespace tfm
