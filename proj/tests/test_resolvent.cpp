#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "ndf/error.hpp"
#include "ndf/resolvent.hpp"

using namespace ndf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EnergyFunctional two_node_square(const SpacePtr& s) {
  Eigen::Matrix2d a;
  a << 1, -1, -1, 1;
  return make_quadratic_form(s, a);
}

Fn sym_fn(Rng& rng, const SpacePtr& s, double scale = 3.0) { return uniform_fn(rng, s, -scale, scale); }

// m-weighted distance between two solves is bounded by their certificates.
void check_certificates_agree(const ResolventResult& a, const ResolventResult& b, double lambda) {
  const double dist = norm(a.minimizer - b.minimizer);
  CHECK(dist <= lambda * (a.optimality_residual + b.optimality_residual) + 1e-12);
}

double soft_threshold(double z, double t) { return std::copysign(std::max(std::abs(z) - t, 0.0), z); }

}  // namespace

TEST_CASE("zero energy returns f exactly") {
  auto s = FiniteMeasureSpace::weighted({1.0, 2.0, 0.5});
  const Fn f(s, {1.5, -2.0, 0.25});
  const auto r = resolvent(make_zero_energy(s), 3.0, f);
  CHECK(r.minimizer == f);
  CHECK(r.converged);
  CHECK(r.optimality_residual == 0.0);
}

TEST_CASE("two-node quadratic matches the closed form") {
  auto s = FiniteMeasureSpace::counting(2);
  const auto e = two_node_square(s);
  const Fn f(s, {1.0, -1.0});
  const auto r = resolvent(e, 0.25, f);
  CHECK(r.minimizer[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.minimizer[1] == doctest::Approx(-0.5).epsilon(1e-12));

  const Fn g(s, {3.0, 1.0});
  for (double lambda : {1e-2, 1e-1, 1.0, 10.0}) {
    for (auto strategy : {SolverStrategy::automatic, SolverStrategy::newton_backtracking,
                          SolverStrategy::proximal_gradient_backtracking}) {
      const SolverConfig cfg{.tolerance = 1e-8, .strategy = strategy};
      const auto rr = resolvent(e, lambda, g, cfg);
      REQUIRE(rr.converged);
      // Mean 2 preserved, difference 2 scaled by 1/(1+4 lambda).
      const double half = 1.0 / (1.0 + 4.0 * lambda);
      const Fn exact(s, {2.0 + half, 2.0 - half});
      CHECK(norm(rr.minimizer - exact) <= 10 * cfg.tolerance);
      CHECK(rr.optimality_residual <= cfg.tolerance);
    }
  }
}

TEST_CASE("quadratic forms match a direct linear solve") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_space(rng, {.nodes = 6});
    const auto n = static_cast<Eigen::Index>(s->size());
    Eigen::MatrixXd b = Eigen::MatrixXd::Random(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rng.uniform(-1, 1);
    }
    const Eigen::MatrixXd a = b.transpose() * b;
    const auto e = make_quadratic_form(s, a);
    const Fn f = sym_fn(rng, s);
    const double lambda = rng.log_uniform(1e-2, 10);
    // (lambda 2A + M) g = M f
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd fv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i, i) = s->weight(static_cast<std::size_t>(i));
      fv[i] = f[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd direct = (2.0 * lambda * a + m).fullPivLu().solve(m * fv);
    const auto r = resolvent(e, lambda, f, {.tolerance = 1e-8});
    REQUIRE(r.converged);
    const Fn exact(s, std::vector<double>(direct.data(), direct.data() + n));
    CHECK(norm(r.minimizer - exact) <= 10 * 1e-8);
  }
}

TEST_CASE("forced-equality edges give the weighted mean") {
  auto s = FiniteMeasureSpace::weighted({0.3, 1.7});
  const auto e = make_mixed_energy(s, {{0, 1, EdgeFunction::interval_indicator(0.0)}});
  const Fn f(s, {2.0, -1.0});
  const double mean = (0.3 * 2.0 - 1.7) / 2.0;
  for (double lambda : {1e-3, 1.0, 1e3}) {
    const auto r = resolvent(e, lambda, f);
    CHECK(r.strategy == SolverStrategy::projected_exact_for_indicators);
    CHECK(std::abs(r.minimizer[0] - mean) <= 1e-10);
    CHECK(std::abs(r.minimizer[1] - mean) <= 1e-10);
    const auto d = resolvent(e, lambda, f, {.strategy = SolverStrategy::dual_fista});
    CHECK(d.converged);
    CHECK(std::abs(d.minimizer[0] - mean) <= 1e-8);
  }

  // Two components {0, 1, 2} and {3}.
  auto w = FiniteMeasureSpace::weighted({1.0, 2.0, 3.0, 4.0});
  const auto chain = make_mixed_energy(
      w, {{0, 1, EdgeFunction::interval_indicator(0.0)}, {2, 1, EdgeFunction::interval_indicator(0.0)}});
  const auto r = resolvent(chain, 0.5, Fn(w, {6.0, 0.0, 1.0, 9.0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.minimizer[i] - 1.5) <= 1e-12);
  CHECK(r.minimizer[3] == 9.0);
}

TEST_CASE("two-node nonsmooth closed forms") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double ma = rng.uniform(0.3, 3.0);
    const double mb = rng.uniform(0.3, 3.0);
    auto s = FiniteMeasureSpace::weighted({ma, mb});
    const Fn f = sym_fn(rng, s);
    const double lambda = rng.log_uniform(1e-2, 10);
    const double mean = (ma * f[0] + mb * f[1]) / (ma + mb);
    const double d = f[0] - f[1];
    // The difference D minimizes b(D) + (ma mb / (ma + mb)) (D - d)^2 / (2 lambda).
    const double k = lambda * (ma + mb) / (ma * mb);
    auto expect = [&](double diff) { return Fn(s, {mean + diff * mb / (ma + mb), mean - diff * ma / (ma + mb)}); };

    const auto abs_e = make_mixed_energy(s, {{0, 1, EdgeFunction::power(1.0)}});
    const auto ra = resolvent(abs_e, lambda, f);
    REQUIRE(ra.converged);
    CHECK(norm(ra.minimizer - expect(soft_threshold(d, k))) <= lambda * ra.optimality_residual + 1e-12);

    const double c = rng.uniform(0.1, 2.0);
    const auto box = make_mixed_energy(s, {{0, 1, EdgeFunction::interval_indicator(c)}});
    const auto rb = resolvent(box, lambda, f);
    REQUIRE(rb.converged);
    CHECK(norm(rb.minimizer - expect(std::clamp(d, -c, c))) <= lambda * rb.optimality_residual + 1e-12);
  }
}

TEST_CASE("solutions of random instances are certified minimizers") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng = Rng::stream(seed, "resolvent", 0);
    auto s = random_space(rng, {.nodes = 3 + seed % 6});
    auto e = random_mixed_energy(rng, s, {.nodes = s->size()});
    if (seed % 4 == 0) e = f_shift(e, feasible_point(e, sym_fn(rng, s)));
    const Fn f = sym_fn(rng, s);
    const double lambda = rng.log_uniform(1e-2, 10);
    const auto r = resolvent(e, lambda, f);
    CAPTURE(seed);
    CAPTURE(e.describe());
    CHECK(r.converged);
    CHECK(r.optimality_residual <= 1e-8);
    const ExtReal phi = prox_objective(e, lambda, f, r.minimizer);
    REQUIRE(phi.is_finite());
    CHECK(phi.value() == doctest::Approx(r.objective).epsilon(1e-12));
    // No perturbation does better.
    for (int k = 0; k < 50; ++k) {
      const Fn g = r.minimizer + sym_fn(rng, s, 1e-3 * (1 + k % 5));
      CHECK(prox_objective(e, lambda, f, g).value() >= phi.value() - 1e-10);
    }
  }
}

TEST_CASE("certificates of different strategies are consistent") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Rng rng = Rng::stream(seed, "strategies", 0);
    auto s = random_space(rng, {.nodes = 5});
    const Fn f = sym_fn(rng, s);
    const double lambda = rng.log_uniform(0.05, 5);

    EnergySpec smooth{.nodes = 5, .mix = {EdgeFunction::Kind::huber, EdgeFunction::Kind::quadratic_weighted}};
    const auto es = random_mixed_energy(rng, s, smooth);
    const auto newton = resolvent(es, lambda, f, {.strategy = SolverStrategy::newton_backtracking});
    const auto pg = resolvent(es, lambda, f, {.strategy = SolverStrategy::proximal_gradient_backtracking});
    const auto fista = resolvent(es, lambda, f, {.strategy = SolverStrategy::dual_fista});
    CHECK(newton.converged);
    CHECK(pg.converged);
    CHECK(fista.converged);
    check_certificates_agree(newton, pg, lambda);
    check_certificates_agree(newton, fista, lambda);

    // Finite-valued nonsmooth energy: the subgradient method rarely reaches
    // the tolerance but its residual is still a valid bound.
    EnergySpec rough{.nodes = 5, .mix = {EdgeFunction::Kind::power, EdgeFunction::Kind::pwl_convex}};
    const auto er = random_mixed_energy(rng, s, rough);
    const auto exact = resolvent(er, lambda, f);
    const auto sub =
        resolvent(er, lambda, f, {.max_iterations = 2000, .strategy = SolverStrategy::subgradient_diminishing});
    CHECK(exact.converged);
    CHECK(sub.converged == (sub.optimality_residual <= 1e-8));
    check_certificates_agree(exact, sub, lambda);
    const auto early = resolvent(er, lambda, f, {.max_iterations = 3, .strategy = SolverStrategy::dual_fista});
    check_certificates_agree(exact, early, lambda);
  }
}

TEST_CASE("non-convergence is flagged") {
  Rng rng(3);
  auto s = random_space(rng, {.nodes = 6});
  const auto e = random_mixed_energy(rng, s, {.nodes = 6, .mix = {EdgeFunction::Kind::power}, .p_max = 1.5});
  const Fn f = sym_fn(rng, s);
  const auto r = resolvent(e, 5.0, f, {.tolerance = 1e-14, .max_iterations = 1, .strategy = SolverStrategy::dual_fista});
  CHECK_FALSE(r.converged);
  CHECK(r.optimality_residual > 1e-14);
  CHECK(r.iterations == 1);
}

TEST_CASE("resolvent argument validation") {
  auto s = FiniteMeasureSpace::counting(2);
  const Fn f(s, {1.0, 0.0});
  const auto e = two_node_square(s);
  CHECK_THROWS_AS(resolvent(e, 0.0, f), InvalidArgument);
  CHECK_THROWS_AS(resolvent(e, -1.0, f), InvalidArgument);
  CHECK_THROWS_AS(resolvent(e, 1.0, f, {.tolerance = 0.0}), InvalidArgument);
  CHECK_THROWS_AS(resolvent(e, 1.0, f, {.max_iterations = 0}), InvalidArgument);
  CHECK_THROWS_AS(resolvent(e, 1.0, Fn::zero(FiniteMeasureSpace::counting(3))), DomainMismatch);
  const auto bad = make_negative_control_energy(s, {{0, 1, EdgeFunction::truncated_abs(1.0)}});
  CHECK_THROWS_AS(resolvent(bad, 1.0, f), InvalidArgument);
  const auto rough = make_mixed_energy(s, {{0, 1, EdgeFunction::power(1.0)}});
  CHECK_THROWS_AS(resolvent(rough, 1.0, f, {.strategy = SolverStrategy::newton_backtracking}), InvalidArgument);
  CHECK_THROWS_AS(resolvent(rough, 1.0, f, {.strategy = SolverStrategy::projected_exact_for_indicators}),
                  InvalidArgument);
  const auto box = make_mixed_energy(s, {{0, 1, EdgeFunction::interval_indicator(1.0)}});
  CHECK_THROWS_AS(resolvent(box, 1.0, f, {.strategy = SolverStrategy::subgradient_diminishing}), InvalidArgument);
  CHECK(strategy_from_name("dual_fista") == SolverStrategy::dual_fista);
  CHECK_THROWS_AS(strategy_from_name("bfgs"), ConfigError);
}

TEST_CASE("band projection") {
  auto one = FiniteMeasureSpace::counting(1);
  const auto [u1, v1] = band_projection(Fn(one, {4.0}), Fn(one, {0.0}), 0.0, 1.0);
  CHECK(u1[0] == 3.0);
  CHECK(v1[0] == 1.0);

  auto s = FiniteMeasureSpace::weighted({1.0, 0.5, 2.0, 1.5});
  const Fn u(s, {1.0, 2.0, -1.0, 0.0});
  const Fn v(s, {0.5, 2.5, -1.2, 0.0});
  const auto same = band_projection(u, v, -1.0, 1.0);
  CHECK(same.first == u);
  CHECK(same.second == v);

  CHECK_THROWS_AS(band_projection(u, v, 0.1, 1.0), InvalidBand);
  CHECK_THROWS_AS(band_projection(u, v, -1.0, -0.1), InvalidBand);

  // One-sided bands.
  const auto upper = band_projection(Fn(one, {-6.0}), Fn(one, {0.0}), -kInf, 0.0);
  CHECK(upper.first[0] == -6.0);
  const auto lower = band_projection(Fn(one, {-6.0}), Fn(one, {0.0}), -1.0, kInf);
  CHECK(lower.first[0] == -4.0);
  CHECK(lower.second[0] == -2.0);

  Rng rng(17);
  auto pair_norm = [](const Fn& a, const Fn& b) { return std::sqrt(inner(a, a) + inner(b, b)); };
  for (int trial = 0; trial < 500; ++trial) {
    const double a = -rng.uniform(0, 2);
    const double b = rng.uniform(0, 2);
    const Fn x = sym_fn(rng, s);
    const Fn y = sym_fn(rng, s);
    const auto [px, py] = band_projection(x, y, a, b);
    for (std::size_t i = 0; i < s->size(); ++i) {
      CHECK(px[i] - py[i] >= 2 * a - 1e-12);
      CHECK(px[i] - py[i] <= 2 * b + 1e-12);
      CHECK(px[i] + py[i] == doctest::Approx(x[i] + y[i]).epsilon(1e-14));
    }
    const auto [qx, qy] = band_projection(px, py, a, b);
    CHECK(max_abs_difference(qx, px) <= 1e-15 * (1 + sup_norm(px)));
    CHECK(max_abs_difference(qy, py) <= 1e-15 * (1 + sup_norm(py)));

    const Fn x2 = sym_fn(rng, s);
    const Fn y2 = sym_fn(rng, s);
    const auto [rx, ry] = band_projection(x2, y2, a, b);
    CHECK(pair_norm(px - rx, py - ry) <= pair_norm(x - x2, y - y2) + 1e-12);

    // Variational characterization against a point of the band.
    const auto [cx, cy] = band_projection(x2, y2, a, b);
    CHECK(inner(x - px, cx - px) + inner(y - py, cy - py) <= 1e-12);
  }
}

TEST_CASE("evolve examples") {
  auto s = FiniteMeasureSpace::counting(2);
  const auto e = two_node_square(s);
  const Fn f(s, {1.0, -1.0});
  CHECK(evolve(make_zero_energy(s), 5.0, 7, f).state == f);
  CHECK(evolve(e, 0.0, 3, f).state == f);

  const auto r = evolve(e, 0.25, 100, f);
  CHECK(r.converged);
  const double diff = r.state[0] - r.state[1];
  CHECK(diff == doctest::Approx(2.0 / std::pow(1.01, 100)).epsilon(1e-10));
  CHECK(diff == doctest::Approx(0.739422).epsilon(1e-6));
  CHECK(diff > 2.0 * std::exp(-1.0));

  CHECK_THROWS_AS(evolve(e, -1.0, 3, f), InvalidArgument);
  CHECK_THROWS_AS(evolve(e, 1.0, 0, f), InvalidArgument);
}

TEST_CASE("implicit Euler consistency on the quadratic instance") {
  auto s = FiniteMeasureSpace::counting(2);
  const auto e = two_node_square(s);
  const Fn f(s, {1.0, -1.0});
  const double t = 0.8;
  double previous = kInf;
  for (int n = 1; n <= 64; n *= 2) {
    const Fn whole = evolve(e, t, n, f).state;
    const Fn halves = evolve(e, t / 2, n, evolve(e, t / 2, n, f).state).state;
    const double gap = norm(whole - halves);
    CHECK(gap < previous);
    previous = gap;
    // Step sizes agree, so 2n steps over t is the same as n + n over t/2.
    const Fn fine = evolve(e, t, 2 * n, f).state;
    CHECK(norm(fine - halves) <= 1e-12);
  }
  const double limit = 2.0 * std::exp(-4.0 * t);
  const Fn fine = evolve(e, t, 4096, f).state;
  CHECK(std::abs(fine[0] - fine[1] - limit) <= 1e-3);
}

TEST_CASE("energy is non-increasing along evolve") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = Rng::stream(seed, "evolve", 0);
    auto s = random_space(rng, {.nodes = 5});
    const auto e = random_mixed_energy(rng, s, {.nodes = 5});
    const Fn f = feasible_point(e, sym_fn(rng, s));
    const auto r = evolve(e, 2.0, 20, f);
    CHECK(r.converged);
    for (std::size_t k = 1; k < r.energies.size(); ++k) {
      CHECK(r.energies[k] <= r.energies[k - 1] + 1e-9 + 2 * r.max_residual * (1 + r.energies[k - 1]));
    }
  }
}

TEST_CASE("resolvent property examples") {
  auto s = FiniteMeasureSpace::counting(2);
  const auto e = two_node_square(s);
  const Fn v(s, {0.3, -0.7});
  const auto same = resolvent_property_check(ResolventProperty::nonexpansive, e, 1.0, v, v, 0.0);
  CHECK(same.status == Status::satisfied);
  CHECK(same.lhs.value() == 0.0);

  const Fn u = v + Fn(s, {1.0, 2.0});
  for (double lambda : {0.01, 1.0, 100.0}) {
    CHECK(resolvent_property_check(ResolventProperty::order_preserving, e, lambda, u, v, 0.0).status ==
          Status::satisfied);
  }
  // Hypothesis fails: vacuous.
  CHECK(resolvent_property_check(ResolventProperty::order_preserving, e, 1.0, v, u, 0.0).status == Status::vacuous);
  CHECK(resolvent_property_check(ResolventProperty::linfty_band, e, 1.0, u, v, 1.0).status == Status::vacuous);

  auto w = FiniteMeasureSpace::weighted({1.0, 2.0, 0.5});
  const auto sq = make_mixed_energy(
      w, {{0, 1, EdgeFunction::power(2.0)}, {1, 2, EdgeFunction::power(2.0)}, {2, 0, EdgeFunction::power(2.0)}});
  const Fn a(w, {1.0, 0.2, -0.4});
  const Fn b(w, {0.5, 0.1, 0.3});
  CHECK(resolvent_property_check(ResolventProperty::linfty_band, sq, 0.7, a, b, 0.5).status == Status::satisfied);
  CHECK(property_from_name("invariance_0_alpha") == ResolventProperty::invariance_0_alpha);
  CHECK_THROWS_AS(property_from_name("monotone"), ConfigError);
}

TEST_CASE("resolvent properties on random convex instances") {
  const std::vector<ResolventProperty> kinds{ResolventProperty::nonexpansive, ResolventProperty::order_preserving,
                                             ResolventProperty::linfty_band, ResolventProperty::invariance_0_alpha};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng = Rng::stream(seed, "properties", 0);
    auto s = random_space(rng, {.nodes = 5});
    const auto e = random_mixed_energy(rng, s, {.nodes = 5});
    for (int k = 0; k < 40; ++k) {
      const double lambda = rng.log_uniform(0.05, 5);
      const double alpha = rng.uniform(0.1, 2.0);
      const Fn v = sym_fn(rng, s);
      // Half the pairs satisfy 0 <= u - v <= alpha.
      const Fn u = k % 2 ? v + sym_fn(rng, s, 2.0) : v + sym_fn(rng, s, 0.5 * alpha) + Fn::constant(s, 0.5 * alpha);
      const auto ju = resolvent(e, lambda, u);
      const auto jv = resolvent(e, lambda, v);
      CHECK(ju.converged);
      CHECK(jv.converged);
      for (auto kind : kinds) {
        const auto r = resolvent_property_residual(kind, lambda, u, v, alpha, ju, jv);
        CAPTURE(property_name(kind));
        CHECK(r.status != Status::violated);
      }
    }
  }
}
