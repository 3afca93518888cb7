#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ndf/piecewise_linear.hpp"

namespace ndf {

/// One edge term b(t) of a mixed Dirichlet energy.
///
/// Built-in kinds are convex, symmetric, lower semicontinuous and vanish at 0.
/// truncated_abs (min(|t|, cap)) is the one nonconvex kind; it exists for
/// negative controls only and is rejected by make_mixed_energy.
class EdgeFunction {
 public:
  enum class Kind { power, huber, interval_indicator, quadratic_weighted, pwl_convex, truncated_abs, shifted };

  static EdgeFunction power(double p);
  static EdgeFunction huber(double delta);
  static EdgeFunction interval_indicator(double c);
  static EdgeFunction quadratic_weighted(double w);
  /// Convex symmetric piecewise-linear b; validated (b(0) = 0, mirrored
  /// breakpoints, nondecreasing slopes).
  static EdgeFunction pwl_convex(PiecewiseLinear b);
  static EdgeFunction truncated_abs(double cap);

  Kind kind() const { return kind_; }
  /// power: p, huber: delta, interval_indicator: c, quadratic_weighted: w,
  /// truncated_abs: cap, shifted: the offset.
  double parameter() const { return param_; }
  const PiecewiseLinear& pwl() const { return *pwl_; }
  /// Base function of a shifted edge.
  const EdgeFunction& base() const { return *base_; }

  /// b(t), possibly +infinity.
  double value(double t) const;
  /// One-sided derivatives, +-infinity at or beyond the boundary of the domain.
  double right_derivative(double t) const;
  double left_derivative(double t) const;
  /// b''(t) for smooth kinds.
  double second_derivative(double t) const;

  bool is_convex() const;
  /// Differentiable with locally Lipschitz derivative: power p >= 2, huber,
  /// quadratic_weighted, and shifts of these.
  bool is_smooth() const;
  /// The domain {b < inf} is [-r, r]; +inf for finite-everywhere kinds.
  double domain_radius() const;
  /// Whether b(a t) = a^p b(t) for all a > 0.
  bool is_homogeneous(double p) const;

  /// argmin_t  scale * b(t) + (t - z)^2 / 2, for scale > 0.
  double prox(double z, double scale) const;

  /// t -> (b(c + t) + b(c - t)) / 2 - b(c). Throws ImproperCenter if b(c) = inf.
  EdgeFunction shifted(double c) const;

  std::string describe() const;

 private:
  EdgeFunction(Kind kind, double param) : kind_(kind), param_(param) {}

  Kind kind_;
  double param_;
  std::shared_ptr<const PiecewiseLinear> pwl_;
  std::shared_ptr<const EdgeFunction> base_;
};

/// shifted_edge(b, c): the symmetrized edge function at offset c.
inline EdgeFunction shifted_edge(const EdgeFunction& b, double c) { return b.shifted(c); }

}  // namespace ndf
