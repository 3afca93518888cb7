#include "ndf/contraction.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "ndf/error.hpp"

namespace ndf {

Verdict verify_normal(const PiecewiseLinear& c) {
  if (c.eval(0.0) != 0.0) {
    std::ostringstream os;
    os << "C(0) = " << c.eval(0.0) << " != 0";
    return Verdict::fail(os.str());
  }
  for (std::size_t k = 0; k < c.slopes().size(); ++k) {
    const double s = c.slopes()[k];
    if (s < -1.0 || s > 1.0) {
      std::ostringstream os;
      os << "slope " << s << " on segment " << k << " outside [-1, 1]";
      return Verdict::fail(os.str());
    }
  }
  return Verdict::pass();
}

Verdict verify_increasing_normal(const PiecewiseLinear& p) {
  if (auto v = verify_normal(p); !v) return v;
  if (p.min_slope() < 0.0) {
    std::ostringstream os;
    os << "slope " << p.min_slope() << " is negative";
    return Verdict::fail(os.str());
  }
  return Verdict::pass();
}

namespace {

constexpr std::array<std::pair<ContractionKind, std::string_view>, 15> kNames{{
    {ContractionKind::identity, "identity"},
    {ContractionKind::negation, "negation"},
    {ContractionKind::zero, "zero"},
    {ContractionKind::pos_part, "pos_part"},
    {ContractionKind::abs, "abs"},
    {ContractionKind::clamp_sym, "clamp_sym"},
    {ContractionKind::min_alpha, "min_alpha"},
    {ContractionKind::clamp_0_alpha, "clamp_0_alpha"},
    {ContractionKind::tent, "tent"},
    {ContractionKind::phi_x, "phi_x"},
    {ContractionKind::phi_x1x2, "phi_x1x2"},
    {ContractionKind::sigma_x, "sigma_x"},
    {ContractionKind::case2_sigma, "case2_sigma"},
    {ContractionKind::case2_psi, "case2_psi"},
    {ContractionKind::case3_psi, "case3_psi"},
}};

void require(bool cond, const char* msg) {
  if (!cond) throw InvalidArgument(msg);
}

void require_alpha(double a) {
  require(std::isfinite(a) && a >= 0.0, "contraction parameter alpha must be finite and >= 0");
}

void require_ordered(double x1, double x2) {
  require(std::isfinite(x1) && std::isfinite(x2) && x1 < x2, "contraction parameters need x1 < x2");
}

using PL = PiecewiseLinear;

}  // namespace

std::string_view kind_name(ContractionKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ContractionKind kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw InvalidArgument("unknown contraction kind '" + std::string(name) + "'");
}

PiecewiseLinear make_named(ContractionKind kind, const ContractionParams& prm) {
  const double a = prm.alpha;
  switch (kind) {
    case ContractionKind::identity:
      return PL::linear(1.0);
    case ContractionKind::negation:
      return PL::linear(-1.0);
    case ContractionKind::zero:
      return PL::linear(0.0);
    case ContractionKind::pos_part:
      return PL::from_slopes({0.0}, {0.0, 1.0}, 0.0);
    case ContractionKind::abs:
      return PL::from_slopes({0.0}, {-1.0, 1.0}, 0.0);
    case ContractionKind::clamp_sym:
      require_alpha(a);
      return PL::from_slopes({-a, a}, {0.0, 1.0, 0.0}, 0.0);
    case ContractionKind::min_alpha:
      require_alpha(a);
      return PL::from_slopes({a}, {1.0, 0.0}, 0.0);
    case ContractionKind::clamp_0_alpha:
      require_alpha(a);
      return PL::from_slopes({0.0, a}, {0.0, 1.0, 0.0}, 0.0);
    case ContractionKind::tent:
      require_alpha(a);
      return PL::from_slopes({-a / 2, a / 2}, {-1.0, 1.0, -1.0}, 0.0);
    case ContractionKind::phi_x:
      // x >= 0: t - 2(t - x)_+ ; x < 0: -t - 2(x - t)_+. Both have slopes (1, -1) around x.
      require(std::isfinite(prm.x), "phi_x: x must be finite");
      return PL::from_slopes({prm.x}, {1.0, -1.0}, 0.0);
    case ContractionKind::phi_x1x2:
      // Same-sign thresholds: t - 2(t - x1)_+ + 2(t - x2)_+ (mirrored for x2 <= 0).
      // Straddling 0: -t - 2(x1 - t)_+ + 2(t - x2)_+. All are 0 at 0 with slopes (1, -1, 1).
      require_ordered(prm.x1, prm.x2);
      return PL::from_slopes({prm.x1, prm.x2}, {1.0, -1.0, 1.0}, 0.0);
    case ContractionKind::sigma_x:
      require(std::isfinite(prm.x) && prm.x >= 0.0, "sigma_x: needs x >= 0");
      return PL::from_slopes({0.0, prm.x}, {0.0, 1.0, -1.0}, 0.0);
    case ContractionKind::case2_sigma:
      require_ordered(prm.x1, prm.x2);
      require(prm.x1 >= 0.0, "case2_sigma: needs 0 <= x1 < x2");
      return PL::from_slopes({prm.x1, prm.x2}, {0.0, -1.0, 1.0}, 0.0);
    case ContractionKind::case2_psi:
      require_ordered(prm.x1, prm.x2);
      require(prm.x1 >= 0.0, "case2_psi: needs 0 <= x1 < x2");
      return PL::from_slopes({0.0, prm.x1, prm.x2}, {0.0, 1.0, -1.0, 1.0}, 0.0);
    case ContractionKind::case3_psi:
      require_ordered(prm.x1, prm.x2);
      require(prm.x1 < 0.0 && prm.x2 > 0.0, "case3_psi: needs x1 < 0 < x2");
      return PL::from_slopes({prm.x1, prm.x2}, {1.0, -1.0, 0.0}, 0.0);
  }
  throw InvalidArgument("unknown contraction kind");
}

PiecewiseLinear bp_from_contraction(const PiecewiseLinear& c) {
  if (auto v = verify_normal(c); !v) {
    throw InvalidArgument("bp_from_contraction: not a normal contraction: " + v.violation);
  }
  return 0.5 * PL::linear(1.0) - precompose_affine(c, 0.5, 0.0);
}

PiecewiseLinear contraction_from_bp(const PiecewiseLinear& p) {
  if (auto v = verify_increasing_normal(p); !v) {
    throw InvalidArgument("contraction_from_bp: not an increasing normal contraction: " +
                          v.violation);
  }
  return PL::linear(1.0) - precompose_affine(p, 2.0, 0.0);
}

PiecewiseLinear bp_compose(const PiecewiseLinear& p1, const PiecewiseLinear& p2) {
  for (const auto* p : {&p1, &p2}) {
    if (auto v = verify_increasing_normal(*p); !v) {
      throw InvalidArgument("bp_compose: not an increasing normal contraction: " + v.violation);
    }
  }
  return p1 + compose(p2, PL::linear(1.0) - 2.0 * p1);
}

PiecewiseLinear build_Dn(unsigned n) {
  const int k_max = static_cast<int>(n);
  PiecewiseLinear d = named::tent(2.0 * std::pow(3.0, k_max));
  for (int k = k_max - 1; k >= -k_max; --k) d = compose(named::tent(2.0 * std::pow(3.0, k)), d);
  return d;
}

Fn apply(const PiecewiseLinear& c, const Fn& f) {
  return f.map([&c](double t) { return c.eval(t); });
}

}  // namespace ndf
