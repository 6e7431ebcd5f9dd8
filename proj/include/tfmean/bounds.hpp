#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tfmean/ext_real.hpp"
#include "tfmean/transforms.hpp"

namespace tfm {

class DistributionSpec;

// ---------------------------------------------------------------- losses

/// min(chi^(alpha-2) dist^2, dist^alpha).
double power_loss(double alpha, double chi, double dist);
/// dist^2 min(tau''_+(2 chi), tau''_+(2 dist)), 0 at dist = 0.
double general_loss(const Transform& t, double chi, double dist);
/// min(dist, dist^2).
double median_loss(double dist);

// ---------------------------------------------------------------- moments

enum class Provenance { Analytic, Plugin };
std::string_view to_string(Provenance p);

struct MomentEntry {
  ExtReal value;
  Provenance provenance = Provenance::Analytic;
  std::size_t sample_size = 0;  ///< draws behind a plug-in estimate
};

/// Population moments of d(Y, m) entering the bounds. Power moments
/// sigma_a = E[d^a] are keyed by the exponent (matched within 1e-12);
/// everything else by a string tag, see the kTag constants.
class MomentSet {
 public:
  static constexpr std::string_view kSigmaDtau = "sigma_dtau";        // E[tau'(d)]
  static constexpr std::string_view kSigmaDtau2 = "sigma_dtau^2";     // E[tau'(d)^2]
  static constexpr std::string_view kChi = "chi";                     // median of d

  void set_power(double a, ExtReal v, Provenance p = Provenance::Analytic, std::size_t n = 0);
  void set(std::string_view tag, ExtReal v, Provenance p = Provenance::Analytic, std::size_t n = 0);

  bool has_power(double a) const;
  bool has(std::string_view tag) const;
  /// Throws MissingMomentError naming the tag.
  ExtReal power(double a) const;
  ExtReal get(std::string_view tag) const;
  const MomentEntry& entry(std::string_view tag) const;
  const MomentEntry& power_entry(double a) const;

  static std::string power_tag(double a);
  /// All entries as (tag, entry), power moments first, in key order.
  std::vector<std::pair<std::string, MomentEntry>> entries() const;

 private:
  std::vector<std::pair<double, MomentEntry>> powers_;
  std::map<std::string, MomentEntry, std::less<>> named_;
};

// ---------------------------------------------------------------- power rate

struct PowerRateConstants {
  double c0;
  double c1;
  double c2;
};

/// C0, C1, C2 of the explicit power-mean risk bound, case alpha >= 3/2 or
/// alpha <= 3/2 (the two agree at 3/2).
PowerRateConstants power_rate_constants(double alpha);

/// Full right-hand side C0 n^-1 (C1 M1 + C2 n^-e M2) of the power-mean
/// bound, with M1 = sigma_{alpha-1}^{(2-alpha)/(alpha-1)} sigma_{2alpha-2},
/// e = (2-alpha)/(alpha-1), M2 = sigma_alpha for alpha >= 3/2, and
/// M1 = sigma_{2-alpha} sigma_{2alpha-2}, e = 1 for alpha < 3/2.
ExtReal power_rate_constant(double alpha, const MomentSet& moments, double n);

/// Exponents of the sigma moments power_rate_constant reads.
std::vector<double> power_rate_moment_exponents(double alpha);

/// (91/n)(7 sigma_{1/2} sigma_1 + 2 sigma_{3/2} / n).
ExtReal threehalfs_bound(ExtReal sigma_half, ExtReal sigma_one, ExtReal sigma_threehalfs, double n);

// ---------------------------------------------------------------- general rate

/// Plug-in tags read by general_rate_terms (besides kSigmaDtau,
/// kSigmaDtau2 and kChi). Suffix p marks the p-th power version; the plain
/// tags are the p = 1 versions. Values depending on n must be computed for
/// the n passed to general_rate_terms.
struct GeneralRateTags {
  static constexpr std::string_view kSigmaGp = "sigma_g^p";                // E[g(d)^p]
  static constexpr std::string_view kSigmaG = "sigma_g";                   // E[g(d)]
  static constexpr std::string_view kSigmaDtau2p = "sigma_dtau^2p";        // E[tau'(d)^2p]
  static constexpr std::string_view kHHatP = "E_h(2sigmahat)^p";           // E[h(2 hat sigma_tau')^p]
  static constexpr std::string_view kHHat = "E_h(2sigmahat)";
  static constexpr std::string_view kDtauGp = "E_dtau^2p_g^p";             // E[tau'^2p g^p]
  static constexpr std::string_view kDtauG = "E_dtau^2_g";
  static constexpr std::string_view kDtauHp = "E_dtau^2p_h(2dtau/n)^p";    // E[tau'^2p h(2 tau'/n)^p]
  static constexpr std::string_view kDtauH = "E_dtau^2_h(2dtau/n)";
};

struct GeneralRateTerms {
  std::function<double(double)> g_fn;  ///< g(x) = 1 / tau''_+(7x)
  std::function<double(double)> h_fn;  ///< h(x) = g((tau')^-1(12x))
  double p = 2.0;
  double q = 2.0;
  ExtReal S_1, S_p;
  ExtReal V_n1, V_np;
  ExtReal r0;
  ExtReal b_n;
  ExtReal bound;
};

/// g(x) = 1 / tau''_+(7x) with the x -> 0 limit at 0. TailRobust only.
double general_rate_g(const Transform& t, double x);
/// h(x) = g((tau')^-1(12 x)).
double general_rate_h(const Transform& t, double x);

/// The explicit-rate terms and bound
/// (64/n) min(4 sigma_{tau'^2} S_1 + V_{n,1}, 4 sigma_{tau'^2}/tau''_+(4 r0) + b_n).
/// Throws InapplicableError unless t is TailRobust and p > 1.
GeneralRateTerms general_rate_terms(const Transform& t, const MomentSet& moments, double n, double p);

/// Plug-in estimates of every moment general_rate_terms needs at (n, p):
/// `draws` points for the plain expectations and `outer` resampled
/// empirical means of tau'(d) over n points for E[h(2 hat sigma)^p].
MomentSet general_rate_moments(const DistributionSpec& dist, const Transform& t, double n, double p,
                               std::size_t draws, std::size_t outer, std::uint64_t seed);

// ---------------------------------------------------------------- deviation

/// x0 = (delta / (lambda - a)) (a + lambda sqrt(1 - lambda^2 + a^2)) / (a + lambda),
/// a = (1 - rho) / rho. Requires rho > 1/(1+lambda).
double location_x0(double rho, double delta, double lambda);

/// max(x0^2, R^2 - delta^2): bound on the squared distance of the mean from
/// a closed convex set of diameter delta holding mass rho.
double deterministic_location_bound(double rho, double delta, double lambda, double R);

/// 2 rho delta (1 - rho) / (2 rho - 1), the median case lambda = 1.
double median_location_radius(double rho, double delta);

struct TailBound {
  double radius_multiplier;
  double probability_bound;
};

/// multiplier ((3+lambda) eta rho - 1)/((1+lambda) eta rho - 1),
/// probability (2 (1-rho)^(1-eta))^n.
TailBound tail_bound(double lambda, double eta, double rho, double r, double n);

/// multiplier (6 eta rho - 1 - 4 eta^2 rho^2)/(2 eta rho - 1),
/// probability (2 (1-rho)^(1-eta))^n.
TailBound median_tail_bound(double eta, double rho, double r, double n);

/// True when some R <= 2r satisfies tau(R) >= lambda D R, i.e. the
/// large-deviation bound with slope fraction lambda applies at radius r.
bool tail_radius_condition(const Transform& t, double lambda, double r);

}  // namespace tfm
