#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tfmean/spaces.hpp"
#include "tfmean/transforms.hpp"

namespace tfm {

/// Outcome of a seeded property suite. `worst` is the largest observed
/// normalized violation (<= 0 means every trial satisfied the property).
struct CheckReport {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = -std::numeric_limits<double>::infinity();
  bool pass = true;
};

/// Random point of the space for property tests: Gaussian coordinates at a
/// log-uniform scale in [1e-2, 1e2] (Euclidean), a uniform position on a
/// uniform edge (tree), exp of a symmetric Gaussian at a log-uniform scale
/// in [1e-1, 2] (SPD).
Point random_point(const Space& s, std::uint64_t seed, std::uint64_t index);

/// quadruple gap <= 1e-9 (1 + largest term). `constant` = 0 uses the
/// transform's constant (sharp for powers), otherwise the given one.
CheckReport check_quadruple(const Space& s, const Transform& t, std::size_t trials,
                            std::uint64_t seed, double constant = 0.0);

/// CAT(0) midpoint inequality within 1e-9 (1 + largest squared distance).
CheckReport check_midpoint(const Space& s, std::size_t trials, std::uint64_t seed);

/// Symmetry and triangle inequality within 1e-9 (1 + largest distance).
CheckReport check_metric_axioms(const Space& s, std::size_t trials, std::uint64_t seed);

/// d(gamma(a), gamma(b)) = |a - b| d(q, p) within 1e-9 relative, and exact
/// endpoints.
CheckReport check_geodesics(const Space& s, std::size_t trials, std::uint64_t seed);

/// Transform invariants on random arguments in [0, 1e3]: subadditivity of
/// tau', the sandwich bounds, the curvature bound, the scaling of tau'.
CheckReport check_transform(const Transform& t, std::size_t trials, std::uint64_t seed);

/// Empirical variance inequality at a computed minimizer m_n:
/// F_n(q) - F_n(m_n) >= d(q, m_n)^2 / 2 * (1/n) sum tau''_+(d(Y_i, m_n) + d(q, m_n)) - slack
/// for `trials` random q at log-uniform radius in [chi / 100, 100 chi]
/// around m_n, chi the median of d(Y_i, m_n). On SPD spaces the radius is
/// capped at 8 to stay inside what the eigen-solvers resolve.
CheckReport check_variance_inequality(const Space& s, const Transform& t, const std::vector<Point>& sample,
                                      const Point& m_n, std::size_t trials, std::uint64_t seed,
                                      double slack = 1e-7);

/// Median version: right side (w^2/2) d(q,m)^2 (1/n) sum (d(Y_i,m) + d(q,m))^-1 over Y_i
/// outside the bow tie B(m, q, w).
CheckReport check_median_variance_inequality(const Space& s, const std::vector<Point>& sample,
                                             const Point& m_n, double w, std::size_t trials,
                                             std::uint64_t seed, double slack = 1e-7);

/// Direction for random perturbations around a point: a geodesic step of
/// length `radius` from `from` toward a random point of the space.
Point random_step(const Space& s, const Point& from, double radius, std::uint64_t seed, std::uint64_t index);

}  // namespace tfm
