#pragma once

#include <string>
#include <string_view>

#include "tfmean/ext_real.hpp"

namespace tfm {

enum class TransformKind { Power, Identity, Huber, PseudoHuber, LogCosh, Entropic };

/// Robustness class of a transformation, determined by the slope supremum
/// D = limsup tau'(x) and the sign of the right second derivative.
enum class Robustness {
  TailRobust,           ///< D = infinity
  ContaminationRobust,  ///< D finite and tau''_+ > 0 on (0, inf)
  Median,               ///< tau(x) = x
  BoundedSlopeFlatTail  ///< D finite, tau''_+ vanishes on a ray (Huber)
};

std::string_view to_string(Robustness r);

/// A nondecreasing convex transformation with concave derivative,
/// normalized so that tau(0) = 0 and tau is strictly increasing.
///
/// Immutable value type. Parameters:
///   Power(alpha)        tau(x) = x^alpha, alpha in (1, 2]
///   Identity            tau(x) = x
///   Huber(kink)         x^2 below the kink, 2 kink x - kink^2 above
///   PseudoHuber(scale)  scale^2 (sqrt(1 + (x/scale)^2) - 1)
///   LogCosh             log(cosh(x))
///   Entropic            (x + 1) log(x + 1) - x
class Transform {
 public:
  static Transform power(double alpha);
  static Transform identity();
  static Transform huber(double kink = 1.0);
  static Transform pseudo_huber(double scale = 1.0);
  static Transform log_cosh();
  static Transform entropic();

  /// Parses `power:<alpha>`, `identity`, `huber:<kink>`,
  /// `pseudo-huber:<scale>`, `log-cosh`, `entropic`.
  static Transform parse(std::string_view spec);

  TransformKind kind() const { return kind_; }
  /// alpha, kink or scale; 0 for parameterless kinds.
  double parameter() const { return param_; }
  std::string to_string() const;

  double tau(double x) const;
  double dtau(double x) const;
  double ddtau_plus(double x) const;
  double inv_dtau(double z) const;

  ExtReal slope_sup() const;
  Robustness classify() const;

  /// True when tau is x^alpha, which admits the sharp quadruple constant.
  bool is_power() const { return kind_ == TransformKind::Power; }
  /// Quadruple-inequality constant: 2^(2-alpha) alpha for powers, else 2.
  double quadruple_constant() const;

  friend bool operator==(const Transform&, const Transform&) = default;

 private:
  Transform(TransformKind kind, double param) : kind_(kind), param_(param) {}

  TransformKind kind_;
  double param_;
};

// Free-function spellings of the core operations.
inline double tau(const Transform& t, double x) { return t.tau(x); }
inline double dtau(const Transform& t, double x) { return t.dtau(x); }
inline double ddtau_plus(const Transform& t, double x) { return t.ddtau_plus(x); }
inline double inv_dtau(const Transform& t, double z) { return t.inv_dtau(z); }
inline Robustness classify(const Transform& t) { return t.classify(); }

/// Generalized inverse sup{x > 0 : tau'(x) <= z} by bracket doubling from
/// [0, 1] and bisection. Independent of the closed forms used by inv_dtau.
double inv_dtau_numeric(const Transform& t, double z);

/// Smallest R > 0 with tau(R) >= lambda * D * R, for D finite and
/// lambda in (0, 1). tau(x)/x is nondecreasing, so bisection applies.
double minimal_linear_radius(const Transform& t, double lambda);

}  // namespace tfm
