#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfmean/ext_real.hpp"
#include "tfmean/spaces.hpp"
#include "tfmean/transforms.hpp"

namespace tfm {

enum class RadialKind { Pareto, HalfGaussian, PowerCDF, PointMass };

/// Law of the radius R = d(Y, m) of a symmetric distribution.
///   Pareto(a, scale)     P(R > r) = (scale / r)^a for r >= scale
///   HalfGaussian(sigma)  R = |sigma N|
///   PowerCDF(k, xmax)    P(R <= x) = (x / xmax)^k on [0, xmax]
///   PointMass            R = 0
class RadialLaw {
 public:
  static RadialLaw pareto(double a, double scale);
  static RadialLaw half_gaussian(double sigma);
  static RadialLaw power_cdf(double k, double xmax);
  static RadialLaw point_mass();
  /// `pareto:<a>:<scale>`, `halfgauss:<sigma>`, `powercdf:<k>:<xmax>`, `point`.
  static RadialLaw parse(std::string_view spec);

  RadialKind kind() const { return kind_; }
  /// Index / sigma / exponent, and scale / xmax (0 when unused).
  double first() const { return a_; }
  double second() const { return b_; }
  std::string to_string() const;

  /// Inverse-CDF draw from one uniform in (0, 1).
  double quantile(double u) const;
  /// E[R^p]; infinite when the moment diverges. p >= 0.
  ExtReal moment(double p) const;
  double median() const;
  /// P(R > r).
  double exceedance(double r) const;
  /// Smallest r with P(R > r) <= prob.
  double exceedance_radius(double prob) const;
  /// Essential supremum of R (infinite for unbounded laws).
  ExtReal sup() const;

 private:
  RadialLaw(RadialKind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  RadialKind kind_;
  double a_;
  double b_;
};

enum class Family { Radial, StarTree, SpdSymmetric, FourPoint };

/// Generative law of Y with a known population transformed mean.
///
/// Symmetry groups fixing the center: rotations about the center
/// (Radial), leg permutations (StarTree), the geodesic reflection
/// Y -> C Y^{-1} C (SpdSymmetric). FourPoint has no symmetric mean; it is
/// the deterministic median example with masses rho/2 at (+-1, 0) and
/// 1 - rho at the spike (0, s).
///
/// Grammar:
///   radial:<law>@euclidean:<d>     law as in RadialLaw::parse
///   star:<legs>:<law>              hub-centered star with legs of length 1e9
///   spd-sym:<d>:<scale>            I^{1/2} exp(S) I^{1/2}, S symmetric Gaussian
///   fourpoint:<rho>:<s>
class DistributionSpec {
 public:
  static DistributionSpec radial(int dim, RadialLaw law);
  static DistributionSpec star(std::size_t legs, RadialLaw law);
  static DistributionSpec spd_symmetric(int dim, double scale);
  static DistributionSpec four_point(double rho, double spike);
  static DistributionSpec parse(std::string_view spec);

  Family family() const { return family_; }
  const Space& space() const { return space_; }
  const std::string& spec() const { return spec_; }
  /// Radial law of d(Y, center) when it is known in closed form.
  const RadialLaw* radial_law() const { return law_ ? &*law_ : nullptr; }
  const Point& center() const { return center_; }
  double rho() const { return rho_; }
  double spike() const { return spike_; }

  /// i-th point of the stream `seed`; depends only on (seed, i).
  Point draw(std::uint64_t seed, std::uint64_t index) const;
  std::vector<Point> sample(std::size_t n, std::uint64_t seed) const;

 private:
  DistributionSpec(Family f, Space s) : family_(f), space_(std::move(s)) {}
  Family family_;
  Space space_;
  std::string spec_;
  Point center_;
  std::optional<RadialLaw> law_;
  double scale_ = 0.0;
  double rho_ = 0.0;
  double spike_ = 0.0;
};

std::vector<Point> sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed);

/// Replaces each point by `contaminant` independently with probability
/// epsilon; the i-th decision depends only on (seed, i).
std::vector<Point> contaminate(const std::vector<Point>& points, double epsilon,
                               const Point& contaminant, std::uint64_t seed);

/// The symmetry center. Throws NoAnalyticMeanError for FourPoint.
Point population_mean(const DistributionSpec& dist, const Transform& t);

/// Monte Carlo mean of f(d(Y, m)) over `draws` points of stream `seed`,
/// with compensated summation.
double plugin_expectation(const DistributionSpec& dist, const std::function<double(double)>& f,
                          std::size_t draws, std::uint64_t seed);

/// Median of d(Y, m): analytic when the radial law is known, else the
/// empirical median of `draws` points. `estimated` reports which.
double radius_median(const DistributionSpec& dist, bool* estimated = nullptr,
                     std::size_t draws = 1000000, std::uint64_t seed = 0);

/// Exact finite multiset realizing the FourPoint masses: the smallest
/// population size N <= 1000 with N rho / 2 integral (within 1e-9).
std::vector<Point> four_point_multiset(double rho, double spike);

}  // namespace tfm
