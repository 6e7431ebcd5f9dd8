#include "tfmean/transforms.hpp"

#include <cmath>

#include "parse_util.hpp"

namespace tfm {

namespace {

void require_nonnegative(double x, const char* op) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(op) + ": argument must be finite and >= 0");
  }
}

}  // namespace

std::string_view to_string(Robustness r) {
  switch (r) {
    case Robustness::TailRobust: return "tail-robust";
    case Robustness::ContaminationRobust: return "contamination-robust";
    case Robustness::Median: return "median";
    case Robustness::BoundedSlopeFlatTail: return "bounded-slope-flat-tail";
  }
  return "?";
}

Transform Transform::power(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw DomainError("power transform requires alpha in (1, 2]");
  }
  return {TransformKind::Power, alpha};
}

Transform Transform::identity() { return {TransformKind::Identity, 0.0}; }

Transform Transform::huber(double kink) {
  if (!(kink > 0.0) || !std::isfinite(kink)) throw DomainError("huber kink must be > 0");
  return {TransformKind::Huber, kink};
}

Transform Transform::pseudo_huber(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("pseudo-huber scale must be > 0");
  return {TransformKind::PseudoHuber, scale};
}

Transform Transform::log_cosh() { return {TransformKind::LogCosh, 0.0}; }
Transform Transform::entropic() { return {TransformKind::Entropic, 0.0}; }

Transform Transform::parse(std::string_view spec) {
  const auto parts = detail::split(detail::trim(spec), ':');
  const auto name = parts[0];
  auto arg = [&](double fallback) {
    if (parts.size() == 1) return fallback;
    if (parts.size() != 2) throw ConfigError("bad transform spec '" + std::string(spec) + "'");
    return detail::parse_double(parts[1], "transform parameter");
  };
  auto no_arg = [&]() {
    if (parts.size() != 1) throw ConfigError("transform '" + std::string(name) + "' takes no parameter");
  };
  try {
    if (name == "power") {
      if (parts.size() != 2) throw ConfigError("power transform needs an exponent: power:<alpha>");
      return power(arg(2.0));
    }
    if (name == "identity" || name == "median") {
      no_arg();
      return identity();
    }
    if (name == "huber") return huber(arg(1.0));
    if (name == "pseudo-huber") return pseudo_huber(arg(1.0));
    if (name == "log-cosh") {
      no_arg();
      return log_cosh();
    }
    if (name == "entropic") {
      no_arg();
      return entropic();
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown transform '" + std::string(spec) + "'");
}

std::string Transform::to_string() const {
  switch (kind_) {
    case TransformKind::Power: return "power:" + format_double(param_);
    case TransformKind::Identity: return "identity";
    case TransformKind::Huber: return "huber:" + format_double(param_);
    case TransformKind::PseudoHuber: return "pseudo-huber:" + format_double(param_);
    case TransformKind::LogCosh: return "log-cosh";
    case TransformKind::Entropic: return "entropic";
  }
  return "?";
}

double Transform::tau(double x) const {
  require_nonnegative(x, "tau");
  switch (kind_) {
    case TransformKind::Power: return std::pow(x, param_);
    case TransformKind::Identity: return x;
    case TransformKind::Huber: return x < param_ ? x * x : 2.0 * param_ * x - param_ * param_;
    case TransformKind::PseudoHuber: {
      // c^2 (sqrt(1 + u^2) - 1) = c^2 u^2 / (sqrt(1 + u^2) + 1), cancellation-free.
      const double u = x / param_;
      return param_ * param_ * u * u / (std::sqrt(1.0 + u * u) + 1.0);
    }
    case TransformKind::LogCosh:
      // log cosh x = x + log1p(exp(-2x)) - log 2
      return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
    case TransformKind::Entropic: {
      const double l = std::log1p(x);
      return (x + 1.0) * l - x;
    }
  }
  return 0.0;
}

double Transform::dtau(double x) const {
  require_nonnegative(x, "dtau");
  switch (kind_) {
    case TransformKind::Power: return param_ * std::pow(x, param_ - 1.0);
    case TransformKind::Identity: return 1.0;
    case TransformKind::Huber: return x < param_ ? 2.0 * x : 2.0 * param_;
    case TransformKind::PseudoHuber: {
      const double u = x / param_;
      return x / std::sqrt(1.0 + u * u);
    }
    case TransformKind::LogCosh: return std::tanh(x);
    case TransformKind::Entropic: return std::log1p(x);
  }
  return 0.0;
}

double Transform::ddtau_plus(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("ddtau_plus: argument must be finite and > 0");
  switch (kind_) {
    case TransformKind::Power: return param_ * (param_ - 1.0) * std::pow(x, param_ - 2.0);
    case TransformKind::Identity: return 0.0;
    case TransformKind::Huber: return x < param_ ? 2.0 : 0.0;
    case TransformKind::PseudoHuber: {
      const double u = x / param_;
      return std::pow(1.0 + u * u, -1.5);
    }
    case TransformKind::LogCosh: {
      const double c = std::cosh(x);
      return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
    }
    case TransformKind::Entropic: return 1.0 / (1.0 + x);
  }
  return 0.0;
}

double Transform::inv_dtau(double z) const {
  require_nonnegative(z, "inv_dtau");
  const ExtReal d = slope_sup();
  if (d.is_finite() && z >= d.value()) {
    throw UnboundedInverseError("inv_dtau: z >= slope supremum " + d.to_string());
  }
  switch (kind_) {
    case TransformKind::Power: return std::pow(z / param_, 1.0 / (param_ - 1.0));
    case TransformKind::Identity: return 0.0;  // sup of the empty set
    case TransformKind::Huber: return z / 2.0;
    case TransformKind::PseudoHuber: {
      const double v = z / param_;
      return z / std::sqrt((1.0 - v) * (1.0 + v));
    }
    case TransformKind::LogCosh: return std::atanh(z);
    case TransformKind::Entropic: return std::expm1(z);
  }
  return 0.0;
}

ExtReal Transform::slope_sup() const {
  switch (kind_) {
    case TransformKind::Power:
    case TransformKind::Entropic: return ExtReal::infinity();
    case TransformKind::Identity:
    case TransformKind::LogCosh: return 1.0;
    case TransformKind::Huber: return 2.0 * param_;
    case TransformKind::PseudoHuber: return param_;
  }
  return ExtReal::infinity();
}

Robustness Transform::classify() const {
  if (slope_sup().is_infinite()) return Robustness::TailRobust;
  switch (kind_) {
    case TransformKind::Identity: return Robustness::Median;
    case TransformKind::PseudoHuber:
    case TransformKind::LogCosh: return Robustness::ContaminationRobust;
    default: return Robustness::BoundedSlopeFlatTail;
  }
}

double Transform::quadruple_constant() const {
  return is_power() ? std::pow(2.0, 2.0 - param_) * param_ : 2.0;
}

double inv_dtau_numeric(const Transform& t, double z) {
  if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("inv_dtau_numeric: z must be finite and >= 0");
  const ExtReal d = t.slope_sup();
  if (d.is_finite() && z >= d.value()) {
    throw UnboundedInverseError("inv_dtau_numeric: z >= slope supremum");
  }
  // tau' is continuous and nondecreasing; the supremum is the right end of
  // the level set {tau' <= z}. If tau'(x) > z for all x > 0 the set is empty.
  double lo = 0.0;
  double hi = 1.0;
  while (t.dtau(hi) <= z) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericError("inv_dtau_numeric: bracket overflow");
  }
  if (lo == 0.0 && t.dtau(0.0) > z) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (t.dtau(mid) <= z) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double minimal_linear_radius(const Transform& t, double lambda) {
  const ExtReal d = t.slope_sup();
  if (d.is_infinite()) throw InapplicableError("minimal_linear_radius: slope supremum is infinite");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("minimal_linear_radius: lambda must be in (0, 1]");
  const double target = lambda * d.value();
  auto ok = [&](double r) { return t.tau(r) >= target * r; };
  if (t.kind() == TransformKind::Identity) return 0.0;  // tau(R) = R for all R
  if (lambda >= 1.0) throw InapplicableError("minimal_linear_radius: lambda = 1 unreachable for this transform");
  double hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("minimal_linear_radius: no finite radius");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace tfm
