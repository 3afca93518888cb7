#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>

#include "ndf/error.hpp"

namespace ndf {

/// A finite real or +infinity: the value set of an extended-value functional.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  ExtReal(double v) : v_(v) {  // NOLINT: implicit by design of the arithmetic below
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
      throw InvalidArgument("ExtReal: value must be a real or +infinity");
    }
  }
  static ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

  bool is_finite() const { return std::isfinite(v_); }
  bool is_infinite() const { return !is_finite(); }
  /// The raw double (+inf for infinity).
  double value() const { return v_; }

  friend ExtReal operator+(ExtReal a, ExtReal b) { return ExtReal(a.v_ + b.v_); }
  ExtReal& operator+=(ExtReal o) { return *this = *this + o; }
  /// Scaling by a nonnegative factor; 0 * inf is inf (the value stays outside the domain).
  friend ExtReal operator*(double s, ExtReal a) {
    if (a.is_infinite()) return a;
    return ExtReal(s * a.v_);
  }

  friend auto operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }
  friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }

  friend std::ostream& operator<<(std::ostream& os, ExtReal a) {
    if (a.is_infinite()) return os << "inf";
    return os << a.v_;
  }

 private:
  double v_ = 0.0;
};

}  // namespace ndf
