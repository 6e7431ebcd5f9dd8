#include "tfmean/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parse_util.hpp"
#include "tfmean/numeric.hpp"
#include "tfmean/rng.hpp"

namespace tfm {

namespace {

constexpr double kStarLegLength = 1e9;
constexpr double kHalfGaussMedian = 0.6744897501960817;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " must be positive and finite");
}

}  // namespace

// ---------------------------------------------------------------- RadialLaw

RadialLaw RadialLaw::pareto(double a, double scale) {
  require_positive(a, "pareto index");
  require_positive(scale, "pareto scale");
  return {RadialKind::Pareto, a, scale};
}

RadialLaw RadialLaw::half_gaussian(double sigma) {
  require_positive(sigma, "half-gaussian sigma");
  return {RadialKind::HalfGaussian, sigma, 0.0};
}

RadialLaw RadialLaw::power_cdf(double k, double xmax) {
  require_positive(k, "powercdf exponent");
  require_positive(xmax, "powercdf xmax");
  return {RadialKind::PowerCDF, k, xmax};
}

RadialLaw RadialLaw::point_mass() { return {RadialKind::PointMass, 0.0, 0.0}; }

RadialLaw RadialLaw::parse(std::string_view spec) {
  const auto parts = detail::split(detail::trim(spec), ':');
  const auto& name = parts[0];
  auto arg = [&](std::size_t i, const char* what) {
    if (i >= parts.size()) throw ConfigError("radial law '" + std::string(spec) + "' is missing " + what);
    return detail::parse_double(parts[i], what);
  };
  auto arity = [&](std::size_t n) {
    if (parts.size() != n) throw ConfigError("radial law '" + std::string(spec) + "' has wrong arity");
  };
  if (name == "pareto") {
    arity(3);
    return pareto(arg(1, "index"), arg(2, "scale"));
  }
  if (name == "halfgauss") {
    arity(2);
    return half_gaussian(arg(1, "sigma"));
  }
  if (name == "powercdf") {
    arity(3);
    return power_cdf(arg(1, "exponent"), arg(2, "xmax"));
  }
  if (name == "point") {
    arity(1);
    return point_mass();
  }
  throw ConfigError("unknown radial law '" + std::string(spec) + "'");
}

std::string RadialLaw::to_string() const {
  switch (kind_) {
    case RadialKind::Pareto: return "pareto:" + format_double(a_) + ":" + format_double(b_);
    case RadialKind::HalfGaussian: return "halfgauss:" + format_double(a_);
    case RadialKind::PowerCDF: return "powercdf:" + format_double(a_) + ":" + format_double(b_);
    case RadialKind::PointMass: return "point";
  }
  return "?";
}

double RadialLaw::quantile(double u) const {
  switch (kind_) {
    case RadialKind::Pareto: return b_ * std::pow(u, -1.0 / a_);
    case RadialKind::PowerCDF: return b_ * std::pow(u, 1.0 / a_);
    case RadialKind::PointMass: return 0.0;
    case RadialKind::HalfGaussian: {
      // Bisection on the CDF erf(x / (sigma sqrt 2)).
      double lo = 0.0, hi = a_;
      while (std::erf(hi / (a_ * std::numbers::sqrt2)) < u) hi *= 2.0;
      for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::erf(mid / (a_ * std::numbers::sqrt2)) < u ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return 0.0;
}

ExtReal RadialLaw::moment(double p) const {
  if (!(p >= 0.0)) throw DomainError("moment exponent must be nonnegative");
  if (p == 0.0) return 1.0;
  switch (kind_) {
    case RadialKind::Pareto:
      if (p >= a_) return ExtReal::infinity();
      return a_ * std::pow(b_, p) / (a_ - p);
    case RadialKind::PowerCDF: return std::pow(b_, p) * a_ / (a_ + p);
    case RadialKind::HalfGaussian:
      return std::pow(a_, p) * std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) /
             std::sqrt(std::numbers::pi);
    case RadialKind::PointMass: return 0.0;
  }
  return 0.0;
}

double RadialLaw::median() const {
  switch (kind_) {
    case RadialKind::Pareto: return b_ * std::pow(2.0, 1.0 / a_);
    case RadialKind::PowerCDF: return b_ * std::pow(2.0, -1.0 / a_);
    case RadialKind::HalfGaussian: return kHalfGaussMedian * a_;
    case RadialKind::PointMass: return 0.0;
  }
  return 0.0;
}

double RadialLaw::exceedance(double r) const {
  if (r < 0.0) return 1.0;
  switch (kind_) {
    case RadialKind::Pareto: return r <= b_ ? 1.0 : std::pow(b_ / r, a_);
    case RadialKind::PowerCDF: return r >= b_ ? 0.0 : 1.0 - std::pow(r / b_, a_);
    case RadialKind::HalfGaussian: return std::erfc(r / (a_ * std::numbers::sqrt2));
    case RadialKind::PointMass: return 0.0;
  }
  return 0.0;
}

double RadialLaw::exceedance_radius(double prob) const {
  if (!(prob > 0.0 && prob <= 1.0)) throw DomainError("exceedance probability must lie in (0, 1]");
  switch (kind_) {
    case RadialKind::Pareto: return b_ * std::pow(prob, -1.0 / a_);
    case RadialKind::PowerCDF: return b_ * std::pow(1.0 - prob, 1.0 / a_);
    case RadialKind::HalfGaussian: return quantile(1.0 - prob);
    case RadialKind::PointMass: return 0.0;
  }
  return 0.0;
}

ExtReal RadialLaw::sup() const {
  switch (kind_) {
    case RadialKind::PowerCDF: return b_;
    case RadialKind::PointMass: return 0.0;
    default: return ExtReal::infinity();
  }
}

// ---------------------------------------------------------------- DistributionSpec

DistributionSpec DistributionSpec::radial(int dim, RadialLaw law) {
  DistributionSpec d(Family::Radial, Space::euclidean(dim));
  d.center_ = Vector(Vector::Zero(dim));
  d.spec_ = "radial:" + law.to_string() + "@euclidean:" + std::to_string(dim);
  d.law_ = law;
  return d;
}

DistributionSpec DistributionSpec::star(std::size_t legs, RadialLaw law) {
  if (legs < 3) throw ConfigError("star distribution needs at least 3 legs");
  DistributionSpec d(Family::StarTree, Space::tree(MetricTree::star(legs, kStarLegLength)));
  d.center_ = d.space_.as_tree()->vertex_point(0);
  d.spec_ = "star:" + std::to_string(legs) + ":" + law.to_string();
  d.law_ = law;
  return d;
}

DistributionSpec DistributionSpec::spd_symmetric(int dim, double scale) {
  require_positive(scale, "spd noise scale");
  DistributionSpec d(Family::SpdSymmetric, Space::spd(dim));
  d.center_ = Matrix(Matrix::Identity(dim, dim));
  d.scale_ = scale;
  d.spec_ = "spd-sym:" + std::to_string(dim) + ":" + format_double(scale);
  return d;
}

DistributionSpec DistributionSpec::four_point(double rho, double spike) {
  if (!(rho > 0.5 && rho <= 1.0)) throw ConfigError("fourpoint rho must lie in (1/2, 1]");
  require_positive(spike, "fourpoint spike distance");
  DistributionSpec d(Family::FourPoint, Space::euclidean(2));
  d.center_ = Vector(Vector::Zero(2));
  d.rho_ = rho;
  d.spike_ = spike;
  d.spec_ = "fourpoint:" + format_double(rho) + ":" + format_double(spike);
  return d;
}

DistributionSpec DistributionSpec::parse(std::string_view spec) {
  const auto s = detail::trim(spec);
  const auto colon = s.find(':');
  const auto head = s.substr(0, colon);
  const auto rest = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);
  if (head == "radial") {
    const auto at = rest.find('@');
    if (at == std::string_view::npos) throw ConfigError("radial spec needs '@euclidean:<d>'");
    const auto law = RadialLaw::parse(rest.substr(0, at));
    const auto space = rest.substr(at + 1);
    if (space.substr(0, 10) != "euclidean:") throw ConfigError("radial laws live on euclidean:<d>");
    return radial(static_cast<int>(detail::parse_uint(space.substr(10), "dimension")), law);
  }
  if (head == "star") {
    const auto c2 = rest.find(':');
    if (c2 == std::string_view::npos) throw ConfigError("star spec is star:<legs>:<law>");
    return star(detail::parse_uint(rest.substr(0, c2), "legs"), RadialLaw::parse(rest.substr(c2 + 1)));
  }
  if (head == "spd-sym") {
    const auto parts = detail::split(rest, ':');
    if (parts.size() != 2) throw ConfigError("spd-sym spec is spd-sym:<d>:<scale>");
    return spd_symmetric(static_cast<int>(detail::parse_uint(parts[0], "dimension")),
                         detail::parse_double(parts[1], "scale"));
  }
  if (head == "fourpoint") {
    const auto parts = detail::split(rest, ':');
    if (parts.size() != 2) throw ConfigError("fourpoint spec is fourpoint:<rho>:<s>");
    return four_point(detail::parse_double(parts[0], "rho"), detail::parse_double(parts[1], "spike"));
  }
  throw ConfigError("unknown distribution '" + std::string(spec) + "'");
}

Point DistributionSpec::draw(std::uint64_t seed, std::uint64_t index) const {
  auto rng = CounterRng::stream(seed, index);
  switch (family_) {
    case Family::Radial: {
      const int d = space_.dim();
      const double r = law_->kind() == RadialKind::HalfGaussian
                           ? std::abs(law_->first() * rng.normal())
                           : law_->quantile(rng.uniform_open());
      Vector y(d);
      if (d == 1) {
        y(0) = rng.uniform() < 0.5 ? -r : r;
        return y;
      }
      double norm = 0.0;
      do {
        for (int i = 0; i < d; ++i) y(i) = rng.normal();
        norm = y.norm();
      } while (norm == 0.0);
      return Vector(y * (r / norm));
    }
    case Family::StarTree: {
      const auto* tree = space_.as_tree();
      const auto leg = rng.below(tree->num_edges());
      double r = law_->kind() == RadialKind::HalfGaussian
                     ? std::abs(law_->first() * rng.normal())
                     : law_->quantile(rng.uniform_open());
      r = std::min(r, kStarLegLength);
      return tree->canonical({leg, r});
    }
    case Family::SpdSymmetric: {
      const int d = space_.dim();
      Matrix s(d, d);
      for (int i = 0; i < d; ++i) {
        s(i, i) = scale_ * rng.normal();
        for (int j = i + 1; j < d; ++j) s(i, j) = s(j, i) = scale_ * rng.normal() / std::numbers::sqrt2;
      }
      return sym_exp(s);
    }
    case Family::FourPoint: {
      const double u = rng.uniform();
      Vector y(2);
      if (u < rho_ / 2) {
        y << -1.0, 0.0;
      } else if (u < rho_) {
        y << 1.0, 0.0;
      } else {
        y << 0.0, spike_;
      }
      return y;
    }
  }
  return {};
}

std::vector<Point> DistributionSpec::sample(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw DomainError("sample size must be >= 1");
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(draw(seed, i));
  return pts;
}

std::vector<Point> sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed) {
  return dist.sample(n, seed);
}

std::vector<Point> contaminate(const std::vector<Point>& points, double epsilon,
                               const Point& contaminant, std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("contamination epsilon must lie in (0, 1)");
  std::vector<Point> out = points;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto rng = CounterRng::stream(mix_seed({seed, 0x636f6e74ULL}), i);
    if (rng.bernoulli(epsilon)) out[i] = contaminant;
  }
  return out;
}

Point population_mean(const DistributionSpec& dist, const Transform&) {
  if (dist.family() == Family::FourPoint) {
    throw NoAnalyticMeanError("the four-point law has no symmetric population mean");
  }
  return dist.center();
}

double plugin_expectation(const DistributionSpec& dist, const std::function<double(double)>& f,
                          std::size_t draws, std::uint64_t seed) {
  NeumaierSum s;
  const auto& space = dist.space();
  const auto& c = dist.center();
  for (std::size_t i = 0; i < draws; ++i) s.add(f(space.distance(dist.draw(seed, i), c)));
  return s.value() / static_cast<double>(draws);
}

double radius_median(const DistributionSpec& dist, bool* estimated, std::size_t draws,
                     std::uint64_t seed) {
  if (const auto* law = dist.radial_law()) {
    if (estimated) *estimated = false;
    return law->median();
  }
  if (estimated) *estimated = true;
  std::vector<double> r(draws);
  for (std::size_t i = 0; i < draws; ++i) r[i] = dist.space().distance(dist.draw(seed, i), dist.center());
  const auto mid = r.begin() + static_cast<std::ptrdiff_t>(draws / 2);
  std::nth_element(r.begin(), mid, r.end());
  return *mid;
}

std::vector<Point> four_point_multiset(double rho, double spike) {
  if (!(rho > 0.5 && rho <= 1.0)) throw ConfigError("fourpoint rho must lie in (1/2, 1]");
  for (std::size_t n = 2; n <= 1000; n += 2) {
    const double half = static_cast<double>(n) * rho / 2.0;
    const double k = std::round(half);
    if (std::abs(half - k) > 1e-9 || k < 1) continue;
    const auto each = static_cast<std::size_t>(k);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < each; ++i) pts.push_back(Vector((Vector(2) << -1.0, 0.0).finished()));
    for (std::size_t i = 0; i < each; ++i) pts.push_back(Vector((Vector(2) << 1.0, 0.0).finished()));
    for (std::size_t i = 2 * each; i < n; ++i) pts.push_back(Vector((Vector(2) << 0.0, spike).finished()));
    return pts;
  }
  throw ConfigError("fourpoint rho has no exact representation with denominator <= 1000");
}

}  // namespace tfm
