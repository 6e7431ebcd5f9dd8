#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tfmean/spaces.hpp"
#include "tfmean/transforms.hpp"

namespace tfm {

enum class SolverMethod { Weiszfeld, CyclicProx, Auto };

std::string_view to_string(SolverMethod m);
SolverMethod parse_solver_method(std::string_view s);

struct SolverConfig {
  SolverMethod method = SolverMethod::Auto;
  std::size_t max_epochs = 500;
  double tol_obj = 1e-10;       ///< relative objective decrease per epoch
  double tol_step = 1e-9;       ///< point movement per epoch, distance units
  double prox_lambda0 = 1.0;    ///< prox step in epoch k is prox_lambda0 / k
  double weiszfeld_floor = 1e-9;
  std::uint64_t shuffle_seed = 0;

  /// Throws ConfigError unless tolerances are positive and max_epochs >= 1.
  void validate() const;
};

struct EstimateResult {
  Point point;
  double objective = 0.0;  ///< (1/n) sum tau(d(Y_i, point))
  std::size_t epochs_used = 0;
  bool converged = false;
  double final_step = 0.0;
  SolverMethod method = SolverMethod::Auto;  ///< method actually run
};

/// (1/n) sum_i tau(d(Y_i, q)), summed in index order with compensation.
double objective(const Space& s, const Transform& t, const std::vector<Point>& sample, const Point& q);

/// Empirical transformed mean argmin_q sum tau(d(Y_i, q)).
///
/// weiszfeld: iteratively reweighted means with weights tau'(d)/d. Points
///   within weiszfeld_floor of the iterate are handled by the Vardi-Zhang
///   modification, which stops exactly at a data point that is optimal.
///   Euclidean and SPD (in whitened tangent coordinates).
/// cyclic_prox: cyclic proximal point passes in a seeded shuffled order
///   with prox_lambda0 / k, started at the first sample point, run for at
///   most max_epochs / 10 epochs and then polished: by weiszfeld on
///   Euclidean and SPD, by an exact edge-by-edge descent on trees.
/// auto: weiszfeld on Euclidean and SPD, cyclic_prox on trees.
///
/// converged = true means the relative objective decrease and the step of
/// the last epoch are below tol_obj and tol_step, and moving 10 tol_step
/// toward each of 32 random sample points does not lower the objective by
/// more than 1e-9 relative. The nearest sample points are compared against
/// the final iterate and replace it when strictly better.
EstimateResult estimate(const Space& s, const Transform& t, const std::vector<Point>& sample,
                        const SolverConfig& cfg = {});

/// argmin_{s in [0, d]} tau(d - s) + s^2 / (2 lambda).
double prox_step(const Transform& t, double d, double lambda);

/// Estimates on the samples with Y_i replaced by fresh_i, for every i.
std::vector<EstimateResult> replace_one_estimates(const Space& s, const Transform& t,
                                                  const std::vector<Point>& sample,
                                                  const std::vector<Point>& fresh,
                                                  const SolverConfig& cfg = {});

}  // namespace tfm
