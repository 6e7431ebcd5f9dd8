#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "tfmean/error.hpp"

namespace tfm {

/// Nonnegative extended real: either a finite double or +infinity.
///
/// Formulas take and return ExtReal wherever an input may legitimately be
/// infinite (a diverging moment, an unbounded slope), so that infinity is
/// carried as a tag rather than as an IEEE inf that can turn into NaN.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT: implicit from finite

  static constexpr ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }
  /// Maps IEEE +inf to the infinite tag; rejects NaN.
  static ExtReal from_double(double v) {
    if (std::isnan(v)) throw NumericError("ExtReal: NaN");
    if (std::isinf(v)) {
      if (v < 0) throw DomainError("ExtReal: -inf");
      return infinity();
    }
    return ExtReal(v);
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  double value() const {
    if (infinite_) throw DomainError("ExtReal: value() of infinity");
    return value_;
  }
  /// IEEE view, for output and comparisons only.
  constexpr double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtReal(a.value_ + b.value_);
  }
  /// Products of nonnegative extended reals; 0 * inf = 0 (measure-theory
  /// convention).
  friend ExtReal operator*(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) {
      const bool zero = (!a.infinite_ && a.value_ == 0.0) ||
                        (!b.infinite_ && b.value_ == 0.0);
      return zero ? ExtReal(0.0) : infinity();
    }
    return ExtReal(a.value_ * b.value_);
  }
  friend bool operator<(ExtReal a, ExtReal b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator<=(ExtReal a, ExtReal b) { return !(b < a); }
  friend bool operator>(ExtReal a, ExtReal b) { return b < a; }
  friend bool operator>=(ExtReal a, ExtReal b) { return !(a < b); }
  friend bool operator==(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

  std::string to_string() const;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }
inline ExtReal min(ExtReal a, ExtReal b) { return a < b ? a : b; }

std::ostream& operator<<(std::ostream& os, ExtReal x);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double x);

}  // namespace tfm
