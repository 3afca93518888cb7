#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ndf {

/// Continuous piecewise-linear map R -> R in canonical form.
///
/// Stored as strictly increasing breakpoints b_0 < ... < b_{n-1}, one slope per
/// segment (n + 1 of them, the outer two unbounded) and the exact value at t = 0
/// (the anchor). Values at the breakpoints are cached; they are integrated from
/// the anchor when a function is built from slopes, and evaluated directly when
/// it is produced by composition or arithmetic, which keeps deep compositions
/// from accumulating rounding along the chain.
///
/// Canonical form: adjacent segments with equal slopes are merged and
/// breakpoints closer than kMergeTolerance (relative to max(1, |b|)) collapse.
class PiecewiseLinear {
 public:
  static constexpr double kMergeTolerance = 1e-13;

  /// The zero map.
  PiecewiseLinear();

  /// Breakpoints must be nondecreasing; coincident breakpoints delimit a
  /// zero-width segment, which is dropped. Throws InvalidArgument otherwise.
  static PiecewiseLinear from_slopes(std::vector<double> breakpoints, std::vector<double> slopes,
                                     double anchor);
  /// t -> slope * t + anchor.
  static PiecewiseLinear linear(double slope, double anchor = 0.0);

  double eval(double t) const;
  double operator()(double t) const { return eval(t); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  std::span<const double> knot_values() const { return knots_; }
  double anchor() const { return anchor_; }

  /// Index into slopes() of the segment containing t (segments are [b_{k-1}, b_k)).
  std::size_t segment_of(double t) const;
  double min_slope() const;
  double max_slope() const;

  /// Largest mismatch between a knot value and the value reached by following
  /// the previous segment's slope from the previous knot.
  double continuity_defect() const;

  /// Canonical-form equality, componentwise tolerance on breakpoints (relative
  /// to max(1, |b|)), slopes and anchor.
  bool approx_equal(const PiecewiseLinear& other, double tol = 1e-12) const;

  PiecewiseLinear operator-() const;
  friend PiecewiseLinear operator+(const PiecewiseLinear& a, const PiecewiseLinear& b);
  friend PiecewiseLinear operator-(const PiecewiseLinear& a, const PiecewiseLinear& b);
  friend PiecewiseLinear operator*(double s, const PiecewiseLinear& a);

  /// Raw constructor used by the algebra: breakpoints nondecreasing, knots given.
  static PiecewiseLinear from_knots(std::vector<double> breakpoints, std::vector<double> slopes,
                                    std::vector<double> knots, double anchor);

 private:
  void canonicalize();

  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> knots_;
  double anchor_ = 0.0;
};

/// outer o inner, exact up to rounding of the preimage locations.
PiecewiseLinear compose(const PiecewiseLinear& outer, const PiecewiseLinear& inner);

/// t -> c(scale * t + shift).
PiecewiseLinear precompose_affine(const PiecewiseLinear& c, double scale, double shift);

}  // namespace ndf
