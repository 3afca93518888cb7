#include <doctest.h>

#include <cmath>
#include <limits>

#include "ndf/error.hpp"
#include "ndf/functional.hpp"
#include "ndf/rng.hpp"
#include "ndf/sampling.hpp"

using namespace ndf;
using Kind = EdgeFunction::Kind;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b, double rel = 1e-10) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Halve g until E(g) is finite; 0 is always in the domain.
Fn shrink_into_domain(const EnergyFunctional& e, Fn g) {
  while (e.eval(g).is_infinite()) g = 0.5 * g;
  return g;
}

std::vector<EdgeFunction> sample_edges(Rng& rng) {
  std::vector<EdgeFunction> out;
  for (Kind k : {Kind::power, Kind::huber, Kind::interval_indicator, Kind::quadratic_weighted, Kind::pwl_convex}) {
    for (int i = 0; i < 20; ++i) out.push_back(random_edge_function(rng, k));
  }
  out.push_back(EdgeFunction::power(1.0));
  out.push_back(EdgeFunction::power(2.0));
  out.push_back(EdgeFunction::interval_indicator(0.0));
  return out;
}

}  // namespace

TEST_CASE("edge function values") {
  CHECK(EdgeFunction::power(1).value(-2.5) == 2.5);
  CHECK(EdgeFunction::power(3).value(-2) == doctest::Approx(8).epsilon(1e-15));
  CHECK(EdgeFunction::huber(1).value(0.5) == 0.125);
  CHECK(EdgeFunction::huber(1).value(3) == 2.5);
  CHECK(EdgeFunction::interval_indicator(1).value(1.0) == 0.0);
  CHECK(EdgeFunction::interval_indicator(1).value(-1.0) == 0.0);
  CHECK(EdgeFunction::interval_indicator(1).value(1.0000001) == kInf);
  CHECK(EdgeFunction::quadratic_weighted(3).value(2) == 12.0);
  CHECK(EdgeFunction::truncated_abs(1).value(-4) == 1.0);
  CHECK_FALSE(EdgeFunction::truncated_abs(1).is_convex());

  CHECK_THROWS_AS(EdgeFunction::power(0.5), InvalidArgument);
  CHECK_THROWS_AS(EdgeFunction::huber(0), InvalidArgument);
  CHECK_THROWS_AS(EdgeFunction::interval_indicator(-1), InvalidArgument);
  CHECK_THROWS_AS(EdgeFunction::quadratic_weighted(-1), InvalidArgument);
}

TEST_CASE("pwl_convex validation") {
  auto vee = PiecewiseLinear::from_slopes({-1, 0, 1}, {-2, -1, 1, 2}, 0);
  CHECK_NOTHROW(EdgeFunction::pwl_convex(vee));
  CHECK(EdgeFunction::pwl_convex(vee).value(-2) == 3.0);
  // Nonconvex: slopes decrease on the right.
  CHECK_THROWS_AS(EdgeFunction::pwl_convex(PiecewiseLinear::from_slopes({-1, 0, 1}, {-1, -2, 2, 1}, 0)),
                  InvalidArgument);
  // Asymmetric.
  CHECK_THROWS_AS(EdgeFunction::pwl_convex(PiecewiseLinear::from_slopes({0}, {-1, 2}, 0)), InvalidArgument);
  // Nonzero at 0.
  CHECK_THROWS_AS(EdgeFunction::pwl_convex(PiecewiseLinear::from_slopes({0}, {-1, 1}, 1)), InvalidArgument);
}

TEST_CASE("shifted edge examples") {
  auto sq = EdgeFunction::power(2);
  for (double c : {-3.0, 0.0, 0.7, 12.0}) {
    for (double t : {-2.0, -0.3, 0.0, 1.5}) CHECK(close(sq.shifted(c).value(t), t * t, 1e-14));
  }
  auto ab = EdgeFunction::power(1);
  for (double t : {-2.0, 0.0, 0.4, 3.0}) CHECK(ab.shifted(0).value(t) == std::abs(t));
  CHECK(ab.shifted(1).value(2.0) == 1.0);
  CHECK(ab.shifted(1).value(0.5) == 0.0);

  CHECK_THROWS_AS(EdgeFunction::interval_indicator(1).shifted(2), ImproperCenter);
  auto ind = EdgeFunction::interval_indicator(1).shifted(0.25);
  CHECK(ind.domain_radius() == 0.75);
  CHECK(ind.value(0.75) == 0.0);
  CHECK(ind.value(0.76) == kInf);
}

TEST_CASE("edge functions are convex, symmetric and vanish at zero") {
  Rng rng(11);
  for (const auto& b0 : sample_edges(rng)) {
    const double r = std::min(3.0, b0.domain_radius());
    for (const auto& b : {b0, b0.shifted(rng.uniform(-r, r))}) {
      CHECK(b.value(0) == 0.0);
      for (int i = 0; i < 50; ++i) {
        const double s = rng.uniform(-5, 5), t = rng.uniform(-5, 5);
        CHECK(b.value(s) == b.value(-s));
        CHECK(b.value(s) >= 0.0);
        const double mid = b.value(0.5 * (s + t));
        const double avg = 0.5 * (b.value(s) + b.value(t));
        CHECK(mid <= avg + 1e-10 * std::max(1.0, avg));
      }
    }
  }
}

TEST_CASE("one-sided derivatives match difference quotients") {
  Rng rng(12);
  const double h = 1e-6;
  for (const auto& b0 : sample_edges(rng)) {
    const auto b = rng.bernoulli(0.5) ? b0 : b0.shifted(0.5 * std::min(1.0, b0.domain_radius()));
    const double r = std::min(4.0, b.domain_radius());
    if (r < 0.01) continue;
    for (int i = 0; i < 30; ++i) {
      const double t = rng.uniform(-r + 2 * h, r - 2 * h);
      const double fwd = (b.value(t + h) - b.value(t)) / h;
      const double bwd = (b.value(t) - b.value(t - h)) / h;
      const double scale = std::max(1.0, std::abs(b.right_derivative(t)));
      // Convexity: bwd <= left <= right <= fwd, with kinks in between making room.
      CHECK(b.left_derivative(t) <= b.right_derivative(t) + 1e-12 * scale);
      CHECK(bwd <= b.left_derivative(t) + 1e-4 * scale);
      CHECK(b.right_derivative(t) <= fwd + 1e-4 * scale);
    }
  }
  auto ind = EdgeFunction::interval_indicator(1);
  CHECK(ind.right_derivative(1) == kInf);
  CHECK(ind.left_derivative(1) == 0.0);
  CHECK(ind.left_derivative(-1) == -kInf);
  CHECK(ind.right_derivative(-1) == 0.0);
  CHECK(EdgeFunction::power(1).right_derivative(0) == 1.0);
  CHECK(EdgeFunction::power(1).left_derivative(0) == -1.0);
}

TEST_CASE("prox is the minimizer of the proximal objective") {
  Rng rng(13);
  for (const auto& b0 : sample_edges(rng)) {
    const auto b = rng.bernoulli(0.5) ? b0 : b0.shifted(0.5 * std::min(1.0, b0.domain_radius()));
    for (int i = 0; i < 10; ++i) {
      const double z = rng.uniform(-6, 6);
      const double s = rng.log_uniform(1e-2, 1e1);
      const double t = b.prox(z, s);
      auto obj = [&](double u) { return s * b.value(u) + 0.5 * (u - z) * (u - z); };
      REQUIRE(std::isfinite(obj(t)));
      // Oracle: dense grid over the interval between 0 and z, which contains the minimizer.
      double best = kInf;
      const double lo = std::min(0.0, z), hi = std::max(0.0, z);
      for (int k = 0; k <= 4000; ++k) best = std::min(best, obj(lo + (hi - lo) * k / 4000.0));
      CHECK(obj(t) <= best + 1e-9 * std::max(1.0, best));
      // Optimality: 0 in t - z + s * [b'_-(t), b'_+(t)].
      const double tol = 1e-8 * std::max(1.0, std::abs(z));
      CHECK(t - z + s * b.left_derivative(t) <= tol);
      CHECK(t - z + s * b.right_derivative(t) >= -tol);
    }
  }
  CHECK(EdgeFunction::power(1).prox(3, 1) == 2.0);
  CHECK(EdgeFunction::power(1).prox(-0.5, 1) == 0.0);
  CHECK(EdgeFunction::power(2).prox(3, 1) == 1.0);
  CHECK(EdgeFunction::interval_indicator(1).prox(-3, 5) == -1.0);
  CHECK_THROWS_AS(EdgeFunction::truncated_abs(1).prox(1, 1), InvalidArgument);
}

TEST_CASE("eval examples") {
  auto two = FiniteMeasureSpace::counting(2);
  auto e = make_mixed_energy(two, {{0, 1, EdgeFunction::power(2)}});
  CHECK(e.eval(Fn(two, {1, 0})) == 1.0);

  auto ind = make_mixed_energy(two, {{0, 1, EdgeFunction::interval_indicator(1)}});
  CHECK(ind.eval(Fn(two, {3, 0})).is_infinite());
  CHECK(ind.eval(Fn(two, {1, 0})) == 0.0);

  auto three = FiniteMeasureSpace::counting(3);
  auto path = make_mixed_energy(three, {{0, 1, EdgeFunction::power(2)}, {1, 2, EdgeFunction::power(2)}});
  CHECK(path.eval(Fn(three, {1, 0, 0})) == 1.0);

  auto empty = make_mixed_energy(three, {});
  CHECK(empty.kind() == EnergyFunctional::Kind::zero);
  CHECK(empty.eval(Fn(three, {4, 5, 6})) == 0.0);

  Eigen::MatrixXd lap(2, 2);
  lap << 1, -1, -1, 1;
  auto q = make_quadratic_form(two, lap);
  CHECK(q.eval(Fn(two, {1, -1})) == 4.0);

  CHECK_THROWS_AS(e.eval(Fn(three, {1, 0, 0})), DomainMismatch);
  CHECK_THROWS_AS(make_mixed_energy(two, {{0, 2, EdgeFunction::power(2)}}), InvalidArgument);
  CHECK_THROWS_AS(make_mixed_energy(two, {{0, 1, EdgeFunction::truncated_abs(1)}}), InvalidArgument);
  CHECK_NOTHROW(make_negative_control_energy(two, {{0, 1, EdgeFunction::truncated_abs(1)}}));
}

TEST_CASE("quadratic form validation") {
  auto two = FiniteMeasureSpace::counting(2);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0, 1, 1;
  CHECK_THROWS_AS(make_quadratic_form(two, asym), InvalidArgument);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(make_quadratic_form(two, indefinite), InvalidArgument);
  CHECK_THROWS_AS(make_quadratic_form(two, Eigen::MatrixXd::Identity(3, 3)), DomainMismatch);
}

TEST_CASE("f-shift examples") {
  auto one = FiniteMeasureSpace::counting(1);
  auto quartic = make_mixed_energy(FiniteMeasureSpace::counting(2), {{0, 1, EdgeFunction::power(4)}});
  // Single-point quartic realised as an edge to a point pinned at 0.
  auto two = quartic.space();
  auto shift = f_shift(quartic, Fn(two, {1, 0}));
  CHECK(shift.eval(Fn(two, {1, 0})) == 7.0);
  for (double g : {0.3, -1.7, 2.0}) {
    CHECK(close(shift.eval(Fn(two, {g, 0})).value(), std::pow(g, 4) + 6 * g * g));
  }
  CHECK(shift.eval(Fn::zero(two)) == 0.0);

  Rng rng(21);
  auto space = random_space(rng, {.nodes = 4});
  Eigen::MatrixXd b = Eigen::MatrixXd::Random(4, 4);
  auto q = make_quadratic_form(space, b.transpose() * b);
  for (int i = 0; i < 100; ++i) {
    Fn f = random_fn(rng, space), g = random_fn(rng, space);
    CHECK(close(f_shift(q, f).eval(g).value(), q.eval(g).value(), 1e-12));
    CHECK(explicit_shift(q, f).kind() == EnergyFunctional::Kind::quadratic);
  }

  auto ind = make_mixed_energy(FiniteMeasureSpace::counting(2), {{0, 1, EdgeFunction::interval_indicator(1)}});
  CHECK_THROWS_AS(f_shift(ind, Fn(ind.space(), {2, 0})), ImproperCenter);
  CHECK_THROWS_AS(explicit_shift(ind, Fn(ind.space(), {2, 0})), ImproperCenter);
  (void)one;
}

TEST_CASE("shift consistency with shifted edges") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    EnergySpec spec{.nodes = 2 + rng.below(5)};
    auto space = random_space(rng, spec);
    auto e = random_mixed_energy(rng, space, spec);
    Fn f = shrink_into_domain(e, random_fn(rng, space));
    auto lazy = f_shift(e, f);
    auto eager = explicit_shift(e, f);
    REQUIRE(eager.kind() == EnergyFunctional::Kind::mixed);
    for (int i = 0; i < 10; ++i) {
      Fn g = random_fn(rng, space);
      const double a = lazy.eval(g).value(), b = eager.eval(g).value();
      // Scale of the cancelling terms E(f +- g), E(f).
      const double scale = std::max({1.0, e.eval(f).value(), std::isfinite(a) ? std::abs(a) + e.eval(f).value() : 0.0});
      if (std::isinf(a) || std::isinf(b)) {
        CHECK(a == b);
      } else {
        CHECK(std::abs(a - b) <= 1e-10 * scale);
      }
      CHECK(lazy.eval(-g) == lazy.eval(g));
    }
    CHECK(lazy.eval(Fn::zero(space)) == 0.0);
  }
}

TEST_CASE("nested-shift identity") {
  Rng rng(41);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    EnergySpec spec{.nodes = 2 + rng.below(4)};
    auto space = random_space(rng, spec);
    auto e = random_mixed_energy(rng, space, spec);
    Fn f = shrink_into_domain(e, random_fn(rng, space));
    auto ef = f_shift(e, f);
    Fn g = shrink_into_domain(ef, random_fn(rng, space));
    auto efg = f_shift(ef, g);
    auto plus = f_shift(e, f + g), minus = f_shift(e, f - g);
    for (int i = 0; i < 5; ++i) {
      Fn h = random_fn(rng, space);
      const ExtReal lhs = efg.eval(h);
      const ExtReal p = plus.eval(h), m = minus.eval(h);
      if (p.is_infinite() || m.is_infinite()) {
        CHECK(lhs.is_infinite());
        continue;
      }
      const double rhs = 0.5 * (p.value() + m.value());
      const double scale = std::max({1.0, e.eval(f + g).value(), e.eval(f - g).value(), e.eval(f).value(),
                                     std::abs(lhs.value()), std::abs(rhs)});
      CHECK(std::abs(lhs.value() - rhs) <= 1e-10 * scale);
      ++checked;
    }
    // Flattening nested shifts agrees with the lazy form.
    auto flat = explicit_form(efg);
    CHECK(flat.kind() == EnergyFunctional::Kind::mixed);
  }
  CHECK(checked > 500);
}

TEST_CASE("midpoint convexity of built-in functionals") {
  Rng rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    EnergySpec spec{.nodes = 2 + rng.below(5)};
    auto space = random_space(rng, spec);
    auto e = random_mixed_energy(rng, space, spec);
    Fn c = shrink_into_domain(e, random_fn(rng, space));
    for (const auto& fun : {e, f_shift(e, c)}) {
      for (int i = 0; i < 10; ++i) {
        Fn f = random_fn(rng, space), g = random_fn(rng, space);
        if (rng.bernoulli(0.5)) {
          f = shrink_into_domain(fun, f);
          g = shrink_into_domain(fun, g);
        }
        const ExtReal mid = fun.eval(0.5 * (f + g));
        const ExtReal a = fun.eval(f), b = fun.eval(g);
        if (a.is_infinite() || b.is_infinite()) continue;
        REQUIRE(mid.is_finite());
        const double avg = 0.5 * (a.value() + b.value());
        CHECK(mid.value() <= avg + 1e-10 * std::max(1.0, avg + std::abs(fun.eval(f - g).value())));
      }
    }
  }
}

TEST_CASE("nonconvex control fails midpoint convexity somewhere") {
  Rng rng(52);
  auto space = FiniteMeasureSpace::counting(3);
  auto e = random_mixed_energy(rng, space, {.nodes = 3, .nonconvex = true});
  CHECK_FALSE(e.is_convex());
  bool violated = false;
  for (int i = 0; i < 2000 && !violated; ++i) {
    Fn f = random_fn(rng, space), g = random_fn(rng, space);
    violated = e.eval(0.5 * (f + g)).value() > 0.5 * (e.eval(f).value() + e.eval(g).value()) + 1e-9;
  }
  CHECK(violated);
}

TEST_CASE("homogeneity of power energies") {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    EnergySpec spec{.nodes = 2 + rng.below(4), .mix = {Kind::power}};
    const double p = rng.uniform(1.0, 4.0);
    spec.p_min = spec.p_max = p;
    auto space = random_space(rng, spec);
    auto e = random_mixed_energy(rng, space, spec);
    REQUIRE(is_positively_homogeneous(e, p));
    CHECK_FALSE(is_positively_homogeneous(e, p + 0.5));
    Fn f = random_fn(rng, space), g = random_fn(rng, space);
    const double a = rng.log_uniform(1e-2, 1e1);
    CHECK(close(e.eval(a * f).value(), std::pow(a, p) * e.eval(f).value()));
    const double lhs = f_shift(e, a * f).eval(a * g).value();
    const double rhs = std::pow(a, p) * f_shift(e, f).eval(g).value();
    // Relative to the cancelling terms.
    const double scale = std::pow(a, p) * std::max({1.0, e.eval(f + g).value(), e.eval(f - g).value()});
    CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
  }
  auto two = FiniteMeasureSpace::counting(2);
  CHECK(is_positively_homogeneous(make_zero_energy(two), 3.0));
  CHECK(is_positively_homogeneous(make_quadratic_form(two, Eigen::MatrixXd::Identity(2, 2)), 2.0));
  CHECK(is_positively_homogeneous(make_mixed_energy(two, {{0, 1, EdgeFunction::interval_indicator(0)}}), 1.7));
}
