#pragma once

#include <cmath>
#include <ostream>

#include "modlab/error.hpp"

namespace modlab {

/// A value in [0, +inf]. Infinity is a distinct state, never a float.
class ExtendedValue {
 public:
  constexpr ExtendedValue() = default;

  static ExtendedValue finite(double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      // Tiny negatives come out of LP round-off; clamp them.
      if (v < 0.0 && v > -1e-9) return ExtendedValue(0.0, false);
      throw Error(ErrorKind::InvalidRange, "extended value must be finite and nonnegative");
    }
    return ExtendedValue(v, false);
  }
  static constexpr ExtendedValue infinity() { return ExtendedValue(0.0, true); }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  double value() const {
    if (infinite_) throw Error(ErrorKind::InvalidRange, "value() called on infinity");
    return value_;
  }
  /// Finite value, or +inf as a double for comparisons and printing.
  double as_double() const { return infinite_ ? HUGE_VAL : value_; }

  friend bool operator==(const ExtendedValue& a, const ExtendedValue& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend bool operator<(const ExtendedValue& a, const ExtendedValue& b) {
    return a.as_double() < b.as_double();
  }
  friend bool operator<=(const ExtendedValue& a, const ExtendedValue& b) {
    return a.as_double() <= b.as_double();
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedValue& v) {
    if (v.infinite_) return os << "inf";
    return os << v.value_;
  }

 private:
  constexpr ExtendedValue(double v, bool inf) : value_(v), infinite_(inf) {}

  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace modlab
