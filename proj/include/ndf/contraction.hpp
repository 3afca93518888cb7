#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ndf/measure_space.hpp"
#include "ndf/piecewise_linear.hpp"

namespace ndf {

/// Outcome of a predicate check on a piecewise-linear map.
struct Verdict {
  bool ok = true;
  std::string violation;

  explicit operator bool() const { return ok; }
  static Verdict pass() { return {}; }
  static Verdict fail(std::string why) { return {false, std::move(why)}; }
};

/// C(0) = 0 exactly and every slope in [-1, 1].
Verdict verify_normal(const PiecewiseLinear& c);
/// Normal with every slope in [0, 1].
Verdict verify_increasing_normal(const PiecewiseLinear& p);

enum class ContractionKind {
  identity,
  negation,
  zero,
  pos_part,       // 0 v x
  abs,            // |x|
  clamp_sym,      // -a v x ^ a
  min_alpha,      // x ^ a
  clamp_0_alpha,  // 0 v x ^ a
  tent,           // (-a - x) v x ^ (a - x): identity on [-a/2, a/2], slope -1 outside
  phi_x,          // one sign change at x
  phi_x1x2,       // two sign changes at x1 < x2
  sigma_x,        // phi_x(t_+), x >= 0
  case2_sigma,    // (0 ^ (x1 - t)) v (t + x1 - 2 x2), 0 <= x1 < x2
  case2_psi,      // phi_{x1,x2}(t_+), 0 <= x1 < x2
  case3_psi,      // (t - 2 x1) ^ -(t ^ x2), x1 < 0 < x2
};

struct ContractionParams {
  double alpha = 0.0;
  double x = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
};

PiecewiseLinear make_named(ContractionKind kind, const ContractionParams& params = {});

std::string_view kind_name(ContractionKind kind);
/// Throws InvalidArgument for an unknown name.
ContractionKind kind_from_name(std::string_view name);

namespace named {
inline PiecewiseLinear identity() { return make_named(ContractionKind::identity); }
inline PiecewiseLinear negation() { return make_named(ContractionKind::negation); }
inline PiecewiseLinear zero() { return make_named(ContractionKind::zero); }
inline PiecewiseLinear pos_part() { return make_named(ContractionKind::pos_part); }
inline PiecewiseLinear abs() { return make_named(ContractionKind::abs); }
inline PiecewiseLinear clamp_sym(double a) { return make_named(ContractionKind::clamp_sym, {.alpha = a}); }
inline PiecewiseLinear min_alpha(double a) { return make_named(ContractionKind::min_alpha, {.alpha = a}); }
inline PiecewiseLinear clamp_0_alpha(double a) {
  return make_named(ContractionKind::clamp_0_alpha, {.alpha = a});
}
inline PiecewiseLinear tent(double a) { return make_named(ContractionKind::tent, {.alpha = a}); }
inline PiecewiseLinear phi(double x) { return make_named(ContractionKind::phi_x, {.x = x}); }
inline PiecewiseLinear phi(double x1, double x2) {
  return make_named(ContractionKind::phi_x1x2, {.x1 = x1, .x2 = x2});
}
inline PiecewiseLinear sigma(double x) { return make_named(ContractionKind::sigma_x, {.x = x}); }
}  // namespace named

/// p(x) = x/2 - C(x/2). Requires C normal; the result is an increasing normal contraction.
PiecewiseLinear bp_from_contraction(const PiecewiseLinear& c);
/// C(x) = x - p(2x). Requires p increasing normal; inverse of bp_from_contraction.
PiecewiseLinear contraction_from_bp(const PiecewiseLinear& p);
/// x -> p1(x) + p2(x - 2 p1(x)).
PiecewiseLinear bp_compose(const PiecewiseLinear& p1, const PiecewiseLinear& p2);

/// Tent composition C_{2*3^-n} o ... o C_{2*3^n} (innermost k = n).
PiecewiseLinear build_Dn(unsigned n);

/// Pointwise application C(f).
Fn apply(const PiecewiseLinear& c, const Fn& f);

}  // namespace ndf
