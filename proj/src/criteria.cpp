#include "ndf/criteria.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "ndf/error.hpp"

namespace ndf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kContractionKinds = 15;

// E(a) + E(b).
ExtReal pair_energy(const EnergyFunctional& e, const Fn& a, const Fn& b) { return e.eval(a) + e.eval(b); }

// E(f + h) + E(f - h).
ExtReal sym_energy(const EnergyFunctional& e, const Fn& f, const Fn& h) { return pair_energy(e, f + h, f - h); }

Fn clamp_fn(const Fn& f, double lo, double hi) {
  return f.map([lo, hi](double t) { return std::clamp(t, lo, hi); });
}

double mean(const Fn& f) {
  const auto v = f.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string_view status_name(Status s) {
  switch (s) {
    case Status::satisfied: return "satisfied";
    case Status::violated: return "violated";
    case Status::vacuous: return "vacuous";
  }
  return "?";
}

Residual inequality_residual(ExtReal lhs, ExtReal rhs, const Tolerance& tol) {
  if (rhs.is_infinite()) return {lhs, rhs, kInf, Status::vacuous};
  if (lhs.is_infinite()) return {lhs, rhs, -kInf, Status::violated};
  const double slack = rhs.value() - lhs.value();
  const bool bad = slack < -(tol.atol + tol.rtol * std::abs(rhs.value()));
  return {lhs, rhs, slack, bad ? Status::violated : Status::satisfied};
}

Residual equality_residual(ExtReal a, ExtReal b, double scale, const Tolerance& tol) {
  if (a.is_infinite() && b.is_infinite()) return {a, b, 0.0, Status::satisfied};
  if (a.is_infinite() || b.is_infinite()) return {a, b, -kInf, Status::violated};
  const double dev = std::abs(a.value() - b.value());
  const bool bad = dev > tol.atol + tol.rtol * scale;
  return {a, b, -dev, bad ? Status::violated : Status::satisfied};
}

Residual compatibility_residual(const EnergyFunctional& e, const PiecewiseLinear& c, const Fn& f, const Fn& g,
                                const Tolerance& tol) {
  if (auto v = verify_normal(c); !v) throw InvalidArgument("compatibility_residual: C is not normal: " + v.violation);
  require_same_space(f, g);
  const Fn cg = apply(c, g);
  return inequality_residual(sym_energy(e, f, cg), sym_energy(e, f, g), tol);
}

std::pair<Fn, Fn> cg_projection(const Fn& u, const Fn& v, double alpha) {
  require_same_space(u, v);
  std::vector<double> p1(u.size()), p2(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    const double plus = std::max(d + alpha, 0.0);
    const double minus = std::max(-(d - alpha), 0.0);
    const double half = 0.5 * (plus - minus);
    p1[i] = v[i] + half;
    p2[i] = u[i] - half;
  }
  return {Fn(u.space(), std::move(p1)), Fn(u.space(), std::move(p2))};
}

std::pair<Residual, Residual> cg_residuals(const EnergyFunctional& e, const Fn& u, const Fn& v, double alpha,
                                           const Tolerance& tol) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("cg_residuals: alpha must be > 0");
  require_same_space(u, v);
  const ExtReal rhs = pair_energy(e, u, v);
  const Fn lo = 0.5 * (u + wedge(u, v));
  const Fn hi = 0.5 * (v + vee(u, v));
  const auto [p1, p2] = cg_projection(u, v, alpha);
  return {inequality_residual(pair_energy(e, lo, hi), rhs, tol), inequality_residual(pair_energy(e, p1, p2), rhs, tol)};
}

Residual bp_star_residual(const EnergyFunctional& e, const PiecewiseLinear& p, const Fn& u, const Fn& v,
                          const Tolerance& tol) {
  if (auto ok = verify_increasing_normal(p); !ok) {
    throw InvalidArgument("bp_star_residual: p is not an increasing normal contraction: " + ok.violation);
  }
  require_same_space(u, v);
  const Fn pd = apply(p, u - v);
  return inequality_residual(pair_energy(e, u - pd, v + pd), pair_energy(e, u, v), tol);
}

std::pair<Residual, Residual> bh_residuals(const EnergyFunctional& e, const Fn& f, const Fn& g, double alpha,
                                           const Tolerance& tol) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("bh_residuals: alpha must be >= 0");
  require_same_space(f, g);
  const ExtReal rhs = pair_energy(e, f, g);
  return {inequality_residual(pair_energy(e, vee(f, g), wedge(f, g)), rhs, tol),
          inequality_residual(pair_energy(e, band_clamp(f, g, alpha), band_clamp(g, f, alpha)), rhs, tol)};
}

// ---------------------------------------------------------------------------
// Identities

namespace {

constexpr std::array<std::pair<IdentityKind, std::string_view>, 9> kIdentityNames{{
    {IdentityKind::cg_median, "cg_median"},
    {IdentityKind::cg_palpha, "cg_palpha"},
    {IdentityKind::bp_subst, "bp_subst"},
    {IdentityKind::bh_veewedge, "bh_veewedge"},
    {IdentityKind::bh_halpha, "bh_halpha"},
    {IdentityKind::reflection_mean, "reflection_mean"},
    {IdentityKind::case1_ids, "case1_ids"},
    {IdentityKind::case2_ids, "case2_ids"},
    {IdentityKind::case3_ids, "case3_ids"},
}};

double pos(double t) { return std::max(t, 0.0); }

// Max deviation of a pair identity over every supplied pair.
template <class F>
double over_pairs(const IdentityInputs& in, F&& dev) {
  double worst = 0.0;
  for (const auto& [f, g] : in.pairs) worst = std::max(worst, dev(f, g));
  if (!in.grid.empty()) {
    auto space = FiniteMeasureSpace::counting(in.grid.size());
    std::vector<double> rev(in.grid.rbegin(), in.grid.rend());
    worst = std::max(worst, dev(Fn(space, in.grid), Fn(space, std::move(rev))));
  }
  return worst;
}

// Max deviation of a scalar identity over the grid and every pair value.
template <class F>
double over_points(const IdentityInputs& in, F&& dev) {
  double worst = 0.0;
  for (double t : in.grid) worst = std::max(worst, dev(t));
  for (const auto& [f, g] : in.pairs) {
    for (double t : f.values()) worst = std::max(worst, dev(t));
    for (double t : g.values()) worst = std::max(worst, dev(t));
  }
  return worst;
}

double dev2(const Fn& a, const Fn& b, const Fn& c, const Fn& d) {
  return std::max(max_abs_difference(a, b), max_abs_difference(c, d));
}

}  // namespace

std::string_view identity_name(IdentityKind kind) {
  for (auto [k, n] : kIdentityNames) {
    if (k == kind) return n;
  }
  return "?";
}

IdentityKind identity_from_name(std::string_view name) {
  for (auto [k, n] : kIdentityNames) {
    if (n == name) return k;
  }
  throw InvalidArgument("unknown identity kind: " + std::string(name));
}

const std::vector<IdentityKind>& all_identity_kinds() {
  static const std::vector<IdentityKind> kinds = [] {
    std::vector<IdentityKind> out;
    for (auto [k, n] : kIdentityNames) out.push_back(k);
    return out;
  }();
  return kinds;
}

double identity_check(IdentityKind kind, const IdentityInputs& in) {
  switch (kind) {
    case IdentityKind::cg_median:
      return over_pairs(in, [](const Fn& f, const Fn& g) {
        const Fn u = f + g, v = f - g;
        const Fn ng = positive_part(-g);
        return dev2(0.5 * (u + wedge(u, v)), f - ng, 0.5 * (v + vee(u, v)), f + ng);
      });
    case IdentityKind::cg_palpha:
      return over_pairs(in, [&](const Fn& f, const Fn& g) {
        const auto [p1, p2] = cg_projection(f + g, f - g, 2.0 * in.alpha);
        const Fn c = clamp_fn(g, -in.alpha, in.alpha);
        return dev2(p1, f + c, p2, f - c);
      });
    case IdentityKind::bp_subst: {
      const PiecewiseLinear p = in.p ? *in.p : 0.5 * named::clamp_0_alpha(1.0);
      if (auto ok = verify_increasing_normal(p); !ok) throw InvalidArgument("bp_subst: " + ok.violation);
      const PiecewiseLinear c = contraction_from_bp(p);
      return over_pairs(in, [&](const Fn& u, const Fn& v) {
        const Fn f = 0.5 * (u + v), g = 0.5 * (u - v);
        const Fn pd = apply(p, u - v), cg = apply(c, g);
        return std::max(dev2(u - pd, f + cg, v + pd, f - cg), max_abs_difference(pd, g - cg));
      });
    }
    case IdentityKind::bh_veewedge:
      return over_pairs(in, [](const Fn& f, const Fn& g) {
        const Fn m = 0.5 * (f + g), d = abs(0.5 * (f - g));
        return dev2(vee(f, g), m + d, wedge(f, g), m - d);
      });
    case IdentityKind::bh_halpha: {
      const PiecewiseLinear c = named::tent(in.alpha);
      return over_pairs(in, [&](const Fn& f, const Fn& g) {
        const Fn m = 0.5 * (f + g), d = apply(c, 0.5 * (f - g));
        return dev2(band_clamp(f, g, in.alpha), m + d, band_clamp(g, f, in.alpha), m - d);
      });
    }
    case IdentityKind::reflection_mean:
      return over_pairs(in, [&](const Fn& f, const Fn& g) {
        const auto [p1, p2] = cg_projection(f, g, in.alpha);
        return dev2(p1, 0.5 * (f + band_clamp(f, g, in.alpha)), p2, 0.5 * (g + band_clamp(g, f, in.alpha)));
      });
    case IdentityKind::case1_ids: {
      if (!(in.x >= 0.0)) throw InvalidArgument("case1_ids: x must be >= 0");
      const PiecewiseLinear phi = named::phi(in.x), sigma = named::sigma(in.x), c = named::tent(2.0 * in.x);
      return over_points(in, [&](double t) {
        const double s = sigma.eval(t), p = phi.eval(t);
        return std::max({std::abs(s - phi.eval(pos(t))), std::abs((p + pos(t)) - (s + t)),
                         std::abs((pos(t) - p) - std::abs(s - t)), std::abs(s - c.eval(pos(t)))});
      });
    }
    case IdentityKind::case2_ids: {
      if (!(0.0 <= in.x1 && in.x1 < in.x2)) throw InvalidArgument("case2_ids: requires 0 <= x1 < x2");
      const double x1 = in.x1, x2 = in.x2;
      const PiecewiseLinear phi = named::phi(x1, x2);
      const PiecewiseLinear sigma = make_named(ContractionKind::case2_sigma, {.x1 = x1, .x2 = x2});
      const PiecewiseLinear psi = make_named(ContractionKind::case2_psi, {.x1 = x1, .x2 = x2});
      const PiecewiseLinear c1 = named::tent(2.0 * x1), c2 = named::tent(2.0 * (x2 - x1));
      return over_points(in, [&](double t) {
        const double s = sigma.eval(t), ps = psi.eval(t);
        const double s_def = std::max(std::min(0.0, x1 - t), t + x1 - 2.0 * x2);
        return std::max({std::abs(s - s_def), std::abs(ps - phi.eval(pos(t))),
                         std::abs(c1.eval(pos(t) - s) - (ps - pos(t - x1))), std::abs(c2.eval(pos(t - x1)) + s),
                         std::abs(std::abs(ps - t) - (pos(t) - phi.eval(t)))});
      });
    }
    case IdentityKind::case3_ids: {
      if (!(in.x1 < 0.0 && 0.0 < in.x2)) throw InvalidArgument("case3_ids: requires x1 < 0 < x2");
      const double x1 = in.x1, x2 = in.x2;
      const PiecewiseLinear phi = named::phi(x1, x2);
      const PiecewiseLinear psi = make_named(ContractionKind::case3_psi, {.x1 = x1, .x2 = x2});
      const PiecewiseLinear phi1 = named::phi(x1), phi2 = named::phi(2.0 * x2);
      return over_points(in, [&](double t) {
        const double ps = psi.eval(t), p = phi.eval(t);
        const double ps_def = std::min(t - 2.0 * x1, -std::min(t, x2));
        const double p_def = -t - 2.0 * pos(x1 - t) + 2.0 * pos(t - x2);
        return std::max({std::abs(ps - ps_def), std::abs(p - p_def), std::abs(ps - phi1.eval(std::min(t, x2))),
                         std::abs(phi2.eval(t - ps) - (std::min(t, x2) - p))});
      });
    }
  }
  throw InvalidArgument("identity_check: unknown kind");
}

// ---------------------------------------------------------------------------
// Lemma chains

std::string_view lemma_name(LemmaKind kind) {
  switch (kind) {
    case LemmaKind::case1: return "case1";
    case LemmaKind::case2: return "case2";
    case LemmaKind::case3: return "case3";
    case LemmaKind::convexity_via_Dn: return "convexity_via_Dn";
  }
  return "?";
}

LemmaKind lemma_from_name(std::string_view name) {
  for (auto k : {LemmaKind::case1, LemmaKind::case2, LemmaKind::case3, LemmaKind::convexity_via_Dn}) {
    if (lemma_name(k) == name) return k;
  }
  throw InvalidArgument("unknown lemma kind: " + std::string(name));
}

namespace {

const PiecewiseLinear& cached_Dn(unsigned n) {
  static const std::vector<PiecewiseLinear> cache = [] {
    std::vector<PiecewiseLinear> out;
    for (unsigned k = 0; k <= 4; ++k) out.push_back(build_Dn(k));
    return out;
  }();
  if (n < cache.size()) return cache[n];
  thread_local std::map<unsigned, PiecewiseLinear> extra;
  auto it = extra.find(n);
  if (it == extra.end()) it = extra.emplace(n, build_Dn(n)).first;
  return it->second;
}

struct Chain {
  const EnergyFunctional& e;
  const Tolerance& tol;
  std::vector<NamedResidual> out;

  ExtReal E(const Fn& h) const { return e.eval(h); }
  void le(std::string name, ExtReal lhs, ExtReal rhs) {
    out.push_back({std::move(name), inequality_residual(lhs, rhs, tol)});
  }
};

std::vector<NamedResidual> chain_case1(const EnergyFunctional& e, const Fn& f, const Fn& g0, double x0,
                                       const Tolerance& tol) {
  const Fn g = x0 < 0 ? -g0 : g0;
  const double x = std::abs(x0);
  Chain c{e, tol, {}};
  const Fn phg = apply(named::phi(x), g), sg = apply(named::sigma(x), g);
  const Fn gp = positive_part(g), ga = abs(g);
  c.le("I1", c.E(f + phg) + c.E(f + gp), c.E(f + g) + c.E(f + sg));
  c.le("I2", c.E(f - phg) + c.E(f - gp), c.E(f - g) + c.E(f - sg));
  c.le("I3", c.E(f + sg) + c.E(f - sg), c.E(f + gp) + c.E(f - gp));
  c.le("S_plus", 2.0 * c.E(f + gp), c.E(f + g) + c.E(f + ga));
  c.le("S_minus", 2.0 * c.E(f - gp), c.E(f - g) + c.E(f - ga));
  c.le("S_sum", c.E(f + gp) + c.E(f - gp), sym_energy(e, f, g));
  c.le("target", sym_energy(e, f, phg), sym_energy(e, f, g));
  return std::move(c.out);
}

std::vector<NamedResidual> chain_case2(const EnergyFunctional& e, const Fn& f, const Fn& g0, double x1_0,
                                       double x2_0, const Tolerance& tol) {
  if (!(x1_0 < x2_0) || (x1_0 < 0.0 && x2_0 > 0.0)) {
    throw InvalidArgument("lemma case2: requires 0 <= x1 < x2 or x1 < x2 <= 0");
  }
  const bool mirror = x1_0 < 0.0;
  const Fn g = mirror ? -g0 : g0;
  const double x1 = mirror ? -x2_0 : x1_0, x2 = mirror ? -x1_0 : x2_0;
  Chain c{e, tol, {}};
  const Fn phg = apply(named::phi(x1, x2), g);
  const Fn psg = apply(make_named(ContractionKind::case2_psi, {.x1 = x1, .x2 = x2}), g);
  const Fn sg = apply(make_named(ContractionKind::case2_sigma, {.x1 = x1, .x2 = x2}), g);
  const Fn gp = positive_part(g);
  const Fn h = g.map([x1](double t) { return std::max(t - x1, 0.0); });
  const Fn p1gp = apply(named::phi(x1), gp);
  c.le("I1", c.E(f + psg) + c.E(f + h), c.E(f + gp) + c.E(f + sg));
  c.le("I2", c.E(f - psg) + c.E(f - h), c.E(f - gp) + c.E(f - sg));
  c.le("I3", c.E(f - sg) + c.E(f + sg), c.E(f + h) + c.E(f - h));
  c.le("I4", c.E(f + gp) + c.E(f + phg), c.E(f + psg) + c.E(f + g));
  c.le("I5", c.E(f - gp) + c.E(f - phg), c.E(f - psg) + c.E(f - g));
  c.le("S_gp_sum", c.E(f + gp) + c.E(f - gp), sym_energy(e, f, g));
  c.le("S_h_plus", 2.0 * c.E(f + h), c.E(f + gp) + c.E(f - p1gp));
  c.le("S_h_minus", 2.0 * c.E(f - h), c.E(f - gp) + c.E(f + p1gp));
  c.le("S_h_sum", c.E(f + h) + c.E(f - h), sym_energy(e, f, g));
  c.le("target", sym_energy(e, f, phg), sym_energy(e, f, g));
  return std::move(c.out);
}

std::vector<NamedResidual> chain_case3(const EnergyFunctional& e, const Fn& f, const Fn& g, double x1, double x2,
                                       const Tolerance& tol) {
  if (!(x1 < 0.0 && 0.0 < x2)) throw InvalidArgument("lemma case3: requires x1 < 0 < x2");
  Chain c{e, tol, {}};
  const Fn phg = apply(named::phi(x1, x2), g);
  const Fn psg = apply(make_named(ContractionKind::case3_psi, {.x1 = x1, .x2 = x2}), g);
  const Fn k = g.map([x2](double t) { return std::min(t, x2); });
  const Fn p2g = apply(named::phi(x2), g);
  c.le("I1", c.E(f + psg) + c.E(f - psg), c.E(f + k) + c.E(f - k));
  c.le("I2", c.E(f + phg) + c.E(f + k), c.E(f + g) + c.E(f + psg));
  c.le("I3", c.E(f - phg) + c.E(f - k), c.E(f - g) + c.E(f - psg));
  c.le("S_k_plus", 2.0 * c.E(f + k), c.E(f + g) + c.E(f + p2g));
  c.le("S_k_minus", 2.0 * c.E(f - k), c.E(f - g) + c.E(f - p2g));
  c.le("S_k_sum", c.E(f + k) + c.E(f - k), sym_energy(e, f, g));
  c.le("target", sym_energy(e, f, phg), sym_energy(e, f, g));
  return std::move(c.out);
}

std::vector<NamedResidual> chain_Dn(const EnergyFunctional& e, const Fn& f, const Fn& g, unsigned n,
                                    const Tolerance& tol) {
  Chain c{e, tol, {}};
  Fn cur = g;
  ExtReal prev = sym_energy(e, f, g);
  const int top = static_cast<int>(n);
  for (int k = top; k >= -top; --k) {
    const Fn next = apply(named::tent(2.0 * std::pow(3.0, k)), cur);
    const ExtReal now = sym_energy(e, f, next);
    c.le("step_" + std::to_string(top - k), now, prev);
    cur = next;
    prev = now;
  }
  c.le("target", sym_energy(e, f, apply(cached_Dn(n), g)), sym_energy(e, f, g));
  c.le("midpoint", 2.0 * e.eval(f), sym_energy(e, f, g));
  return std::move(c.out);
}

}  // namespace

std::vector<NamedResidual> lemma_chain_check(LemmaKind kind, const EnergyFunctional& e, const Fn& f, const Fn& g,
                                             const LemmaParams& params, const Tolerance& tol) {
  require_same_space(f, g);
  switch (kind) {
    case LemmaKind::case1: return chain_case1(e, f, g, params.x, tol);
    case LemmaKind::case2: return chain_case2(e, f, g, params.x1, params.x2, tol);
    case LemmaKind::case3: return chain_case3(e, f, g, params.x1, params.x2, tol);
    case LemmaKind::convexity_via_Dn: return chain_Dn(e, f, g, params.n, tol);
  }
  throw InvalidArgument("lemma_chain_check: unknown kind");
}

Residual homogeneous_reduction_check(const EnergyFunctional& e, const Fn& f, const Fn& g, double alpha, double p,
                                     double rel) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("homogeneous_reduction_check: alpha must be > 0");
  if (!is_positively_homogeneous(e, p)) {
    throw InvalidArgument("homogeneous_reduction_check: functional is not positively homogeneous of degree " +
                          std::to_string(p));
  }
  const Fn h = clamp_fn(g, 0.0, alpha);
  const Fn hs = clamp_fn(g / alpha, 0.0, 1.0);
  const Fn fs = f / alpha;
  const ExtReal lhs = f_shift(e, f).eval(h);
  const ExtReal inner = f_shift(e, fs).eval(hs);
  const double ap = std::pow(alpha, p);
  const ExtReal rhs = ap * inner;
  double scale = e.eval(f).value();
  for (const ExtReal t : {e.eval(f + h), e.eval(f - h)}) {
    if (t.is_finite()) scale = std::max(scale, t.value());
  }
  if (lhs.is_finite()) scale = std::max(scale, std::abs(lhs.value()));
  if (rhs.is_finite()) scale = std::max(scale, std::abs(rhs.value()));
  return equality_residual(lhs, rhs, scale, {.atol = 0.0, .rtol = rel});
}

Fn feasible_point(const EnergyFunctional& e, const Fn& f) {
  if (e.eval(f).is_finite()) return f;
  const Fn m = Fn::constant(f.space(), mean(f));
  Fn d = f - m;
  for (int it = 0; it < 80; ++it) {
    d = 0.5 * d;
    Fn cand = m + d;
    if (e.eval(cand).is_finite()) return cand;
  }
  return m;
}

Fn feasible_direction(const EnergyFunctional& e, const Fn& f, const Fn& g) {
  // Below this size f +- d is decided by rounding rather than by d.
  const double floor = 1e-9 * std::max(1.0, sup_norm(f));
  Fn d = g;
  while (sup_norm(d) >= floor) {
    if (e.eval(f + d).is_finite() && e.eval(f - d).is_finite()) return d;
    d = 0.5 * d;
  }
  const Fn c = Fn::constant(g.space(), mean(g));
  if (e.eval(f + c).is_finite() && e.eval(f - c).is_finite()) return c;
  return Fn::zero(g.space());
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

using Sampler = Witness (*)(Rng&, const EnergyFunctional&, const SweepConfig&);
using Evaluator = std::vector<NamedResidual> (*)(const EnergyFunctional&, const Witness&, const Tolerance&);

struct CheckDef {
  std::string_view name;
  Sampler sample;
  Evaluator evaluate;
};

double draw_alpha(Rng& rng) { return rng.log_uniform(1e-2, 1e1); }

// (f, g) with E(f) and E(f +- g) finite on the feasible fraction of samples.
void draw_pair(Rng& rng, const EnergyFunctional& e, const ValueDistribution& dist, double feasible_rate,
               Witness& w) {
  Fn f = random_fn(rng, e.space(), dist);
  Fn g = random_fn(rng, e.space(), dist);
  if (rng.bernoulli(feasible_rate)) {
    f = feasible_point(e, f);
    g = feasible_direction(e, f, g);
  }
  w.f.assign(f.values().begin(), f.values().end());
  w.g.assign(g.values().begin(), g.values().end());
}

// Two points (u, v) each pulled into the domain on the feasible fraction.
void draw_points(Rng& rng, const EnergyFunctional& e, const ValueDistribution& dist, double feasible_rate,
                 Witness& w) {
  Fn u = random_fn(rng, e.space(), dist);
  Fn v = random_fn(rng, e.space(), dist);
  if (rng.bernoulli(feasible_rate)) {
    u = feasible_point(e, u);
    v = feasible_point(e, v);
  }
  w.f.assign(u.values().begin(), u.values().end());
  w.g.assign(v.values().begin(), v.values().end());
}

ContractionParams draw_params(Rng& rng, ContractionKind kind) {
  ContractionParams p;
  p.alpha = draw_alpha(rng);
  p.x = rng.uniform(-3.0, 3.0);
  double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
  if (a > b) std::swap(a, b);
  if (a == b) b = a + 1.0;
  p.x1 = a;
  p.x2 = b;
  switch (kind) {
    case ContractionKind::sigma_x:
      p.x = std::abs(p.x);
      break;
    case ContractionKind::case2_sigma:
    case ContractionKind::case2_psi:
      p.x1 = std::abs(a) < std::abs(b) ? std::abs(a) : std::abs(b);
      p.x2 = std::abs(a) < std::abs(b) ? std::abs(b) : std::abs(a);
      if (p.x1 == p.x2) p.x2 += 1.0;
      break;
    case ContractionKind::case3_psi:
      p.x1 = -rng.uniform(1e-3, 3.0);
      p.x2 = rng.uniform(1e-3, 3.0);
      break;
    default:
      break;
  }
  return p;
}

PiecewiseLinear draw_named(Rng& rng, std::string& name) {
  const auto kind = static_cast<ContractionKind>(rng.below(kContractionKinds));
  name = std::string(kind_name(kind));
  return make_named(kind, draw_params(rng, kind));
}

PiecewiseLinear draw_normal(Rng& rng, std::string& name) {
  if (rng.bernoulli(0.5)) return draw_named(rng, name);
  name = "random_normal";
  return random_normal_pwl(rng);
}

PiecewiseLinear draw_increasing(Rng& rng, std::string& name) {
  static constexpr std::array<ContractionKind, 6> kIncreasing{ContractionKind::identity, ContractionKind::zero,
                                                              ContractionKind::pos_part, ContractionKind::clamp_sym,
                                                              ContractionKind::min_alpha,
                                                              ContractionKind::clamp_0_alpha};
  if (rng.bernoulli(0.5)) {
    const auto kind = kIncreasing[rng.below(kIncreasing.size())];
    name = std::string(kind_name(kind));
    return make_named(kind, draw_params(rng, kind));
  }
  name = "random_increasing";
  return random_increasing_normal_pwl(rng);
}

ValueDistribution bulk_only(ValueDistribution d) {
  d.heavy_rate = 0.0;
  return d;
}

struct Inputs {
  Fn f;
  Fn g;
};

Inputs inputs_of(const EnergyFunctional& e, const Witness& w) {
  return {Fn(e.space(), w.f), Fn(e.space(), w.g)};
}

Residual slack_agreement(const Residual& a, const Residual& b) {
  const Tolerance tight{.atol = 1e-10, .rtol = 0.0};
  if (a.status == Status::vacuous && b.status == Status::vacuous) return {a.rhs, b.rhs, kInf, Status::vacuous};
  if (std::isinf(a.slack) || std::isinf(b.slack)) {
    const bool same = a.slack == b.slack;
    return {ExtReal::infinity(), ExtReal::infinity(), same ? 0.0 : -kInf, same ? Status::satisfied : Status::violated};
  }
  return equality_residual(a.slack, b.slack, 0.0, tight);
}

const std::vector<CheckDef>& registry() {
  static const std::vector<CheckDef> defs = {
      {"bh",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_points(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.alpha = rng.bernoulli(0.05) ? 0.0 : draw_alpha(rng);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto [a, b] = bh_residuals(e, f, g, w.alpha, tol);
         return std::vector<NamedResidual>{{"bh/lattice", a}, {"bh/band", b}};
       }},
      {"bp_star",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_points(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.maps = {draw_increasing(rng, w.map_kind)};
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [u, v] = inputs_of(e, w);
         return std::vector<NamedResidual>{{"bp_star", bp_star_residual(e, w.maps.at(0), u, v, tol)}};
       }},
      {"cg",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_points(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.alpha = draw_alpha(rng);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [u, v] = inputs_of(e, w);
         auto [a, b] = cg_residuals(e, u, v, w.alpha, tol);
         return std::vector<NamedResidual>{{"cg/median", a}, {"cg/projection", b}};
       }},
      {"compat_named",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.maps = {draw_named(rng, w.map_kind)};
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         return std::vector<NamedResidual>{{"compat_named", compatibility_residual(e, w.maps.at(0), f, g, tol)}};
       }},
      {"compat_random",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.map_kind = "random_normal";
         w.maps = {random_normal_pwl(rng)};
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         return std::vector<NamedResidual>{{"compat_random", compatibility_residual(e, w.maps.at(0), f, g, tol)}};
       }},
      {"composition",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         std::string a, b;
         w.maps = {draw_normal(rng, a), draw_normal(rng, b)};
         w.map_kind = a + "," + b;
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         const auto& c1 = w.maps.at(0);
         const auto& c2 = w.maps.at(1);
         const Fn c1g = apply(c1, g);
         return std::vector<NamedResidual>{
             {"composition/inner", compatibility_residual(e, c1, f, g, tol)},
             {"composition/outer", compatibility_residual(e, c2, f, c1g, tol)},
             {"composition/composed", compatibility_residual(e, compose(c2, c1), f, g, tol)}};
       }},
      {"lemma_case1",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.x = rng.uniform(-3.0, 3.0);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto out = lemma_chain_check(LemmaKind::case1, e, f, g, {.x = w.x}, tol);
         for (auto& r : out) r.name = "lemma_case1/" + r.name;
         return out;
       }},
      {"lemma_case2",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         double a = rng.uniform(0.0, 3.0), b = rng.uniform(0.0, 3.0);
         if (a > b) std::swap(a, b);
         if (a == b) b += 1.0;
         if (rng.bernoulli(0.5)) {
           w.x1 = a;
           w.x2 = b;
         } else {
           w.x1 = -b;
           w.x2 = -a;
         }
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto out = lemma_chain_check(LemmaKind::case2, e, f, g, {.x1 = w.x1, .x2 = w.x2}, tol);
         for (auto& r : out) r.name = "lemma_case2/" + r.name;
         return out;
       }},
      {"lemma_case3",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.x1 = -rng.uniform(1e-3, 3.0);
         w.x2 = rng.uniform(1e-3, 3.0);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto out = lemma_chain_check(LemmaKind::case3, e, f, g, {.x1 = w.x1, .x2 = w.x2}, tol);
         for (auto& r : out) r.name = "lemma_case3/" + r.name;
         return out;
       }},
      {"lemma_dn",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         w.n = static_cast<unsigned>(rng.below(4));
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto out = lemma_chain_check(LemmaKind::convexity_via_Dn, e, f, g, {.n = w.n}, tol);
         for (auto& r : out) r.name = "lemma_dn/" + r.name;
         return out;
       }},
      {"midpoint",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, cfg.dist, cfg.feasible_rate, w);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         return std::vector<NamedResidual>{{"midpoint", compatibility_residual(e, named::zero(), f, g, tol)}};
       }},
      {"transport_bh",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_points(rng, e, bulk_only(cfg.dist), cfg.feasible_rate, w);
         w.alpha = draw_alpha(rng);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto [a, b] = bh_residuals(e, f, g, w.alpha, tol);
         const Fn fp = 0.5 * (f + g), gp = 0.5 * (f - g);
         return std::vector<NamedResidual>{
             {"transport_bh/lattice", slack_agreement(a, compatibility_residual(e, named::abs(), fp, gp, tol))},
             {"transport_bh/band", slack_agreement(b, compatibility_residual(e, named::tent(w.alpha), fp, gp, tol))}};
       }},
      {"transport_bp",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_points(rng, e, bulk_only(cfg.dist), cfg.feasible_rate, w);
         w.maps = {draw_increasing(rng, w.map_kind)};
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [u, v] = inputs_of(e, w);
         const auto& p = w.maps.at(0);
         const Residual a = bp_star_residual(e, p, u, v, tol);
         const Residual b = compatibility_residual(e, contraction_from_bp(p), 0.5 * (u + v), 0.5 * (u - v), tol);
         return std::vector<NamedResidual>{{"transport_bp", slack_agreement(a, b)}};
       }},
      {"transport_cg",
       [](Rng& rng, const EnergyFunctional& e, const SweepConfig& cfg) {
         Witness w;
         draw_pair(rng, e, bulk_only(cfg.dist), cfg.feasible_rate, w);
         w.alpha = draw_alpha(rng);
         return w;
       },
       [](const EnergyFunctional& e, const Witness& w, const Tolerance& tol) {
         auto [f, g] = inputs_of(e, w);
         auto [a, b] = cg_residuals(e, f + g, f - g, w.alpha, tol);
         return std::vector<NamedResidual>{
             {"transport_cg/median", slack_agreement(a, compatibility_residual(e, named::pos_part(), f, -g, tol))},
             {"transport_cg/projection",
              slack_agreement(b, compatibility_residual(e, named::clamp_sym(0.5 * w.alpha), f, g, tol))}};
       }},
  };
  return defs;
}

const CheckDef& find_check(std::string_view name) {
  for (const auto& d : registry()) {
    if (d.name == name) return d;
  }
  throw ConfigError("unknown check: " + std::string(name));
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& d : registry()) out.emplace_back(d.name);
    std::sort(out.begin(), out.end());
    return out;
  }();
  return names;
}

Witness sample_witness(std::string_view check, const EnergyFunctional& e, const SweepConfig& cfg,
                       std::size_t index) {
  const CheckDef& def = find_check(check);
  Rng rng = Rng::stream(cfg.seed, check, index);
  return def.sample(rng, e, cfg);
}

std::vector<NamedResidual> evaluate_check(std::string_view check, const EnergyFunctional& e, const Witness& w,
                                          const Tolerance& tol) {
  return find_check(check).evaluate(e, w, tol);
}

std::size_t Report::violations() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.violations;
  return n;
}

std::size_t Report::vacuous() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.vacuous;
  return n;
}

void accumulate(Report& report, std::string_view check, std::size_t index, const Witness& w,
                const std::vector<NamedResidual>& residuals) {
  for (const auto& nr : residuals) {
    auto it = std::lower_bound(report.checks.begin(), report.checks.end(), nr.name,
                               [](const CheckSummary& s, const std::string& n) { return s.name < n; });
    if (it == report.checks.end() || it->name != nr.name) {
      CheckSummary fresh;
      fresh.name = nr.name;
      fresh.check = std::string(check);
      fresh.min_slack = kInf;
      it = report.checks.insert(it, std::move(fresh));
    }
    CheckSummary& s = *it;
    ++s.n;
    const Residual& r = nr.residual;
    if (r.status == Status::vacuous) {
      ++s.vacuous;
      continue;
    }
    if (r.status == Status::violated) ++s.violations;
    const bool worse = !s.worst_index || r.slack < s.min_slack || (r.slack == s.min_slack && index < *s.worst_index);
    if (worse) {
      s.min_slack = r.slack;
      s.worst_index = index;
      s.worst = w;
      s.worst_residual = r;
    }
  }
}

Report fuzz_sweep(const EnergyFunctional& e, const SweepConfig& cfg, std::string instance) {
  Report report;
  report.seed = cfg.seed;
  report.tol = cfg.tol;
  report.instance = std::move(instance);
  report.n_samples = cfg.n_samples;
  const auto& enabled = cfg.checks.empty() ? check_names() : cfg.checks;
  for (const auto& name : enabled) find_check(name);
  for (const auto& name : enabled) {
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
      const Witness w = sample_witness(name, e, cfg, i);
      accumulate(report, name, i, w, evaluate_check(name, e, w, cfg.tol));
    }
  }
  return report;
}

}  // namespace ndf
