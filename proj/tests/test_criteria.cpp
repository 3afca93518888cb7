#include <doctest.h>

#include <cmath>
#include <limits>

#include "ndf/criteria.hpp"
#include "ndf/error.hpp"

using namespace ndf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EnergyFunctional graph_laplacian_form(const SpacePtr& space, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(space->size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = rng.bernoulli(0.6) ? rng.uniform(0.1, 2.0) : 0.0;
      l(i, i) += w;
      l(j, j) += w;
      l(i, j) -= w;
      l(j, i) -= w;
    }
  }
  return make_quadratic_form(space, l);
}

EnergyFunctional crafted_negative_control() {
  auto two = FiniteMeasureSpace::counting(2);
  return make_negative_control_energy(two, {{0, 1, EdgeFunction::truncated_abs(1.0)}});
}

std::vector<double> dense_grid(int n, double lo, double hi) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace

TEST_CASE("residual semantics") {
  const auto ok = inequality_residual(1.0, 2.0);
  CHECK(ok.status == Status::satisfied);
  CHECK(ok.slack == 1.0);
  CHECK(inequality_residual(2.0, 2.0 - 5e-10).status == Status::satisfied);
  CHECK(inequality_residual(2.0, 2.0 - 2e-9).status == Status::violated);
  CHECK(inequality_residual(ExtReal::infinity(), ExtReal::infinity()).status == Status::vacuous);
  CHECK(inequality_residual(5.0, ExtReal::infinity()).status == Status::vacuous);
  const auto bad = inequality_residual(ExtReal::infinity(), 3.0);
  CHECK(bad.status == Status::violated);
  CHECK(bad.slack == -kInf);
  // Relative part of the tolerance.
  CHECK(inequality_residual(1e6 + 1e-7, 1e6).status == Status::satisfied);
  CHECK(inequality_residual(1e6 + 1e-5, 1e6).status == Status::violated);
}

TEST_CASE("compatibility residual examples") {
  auto s = FiniteMeasureSpace::counting(3);
  Rng rng(1);
  Fn f = random_fn(rng, s), g = random_fn(rng, s);
  const auto z = compatibility_residual(make_zero_energy(s), named::abs(), f, g);
  CHECK(z.slack == 0.0);
  CHECK(z.status == Status::satisfied);

  for (int i = 0; i < 200; ++i) {
    auto e = graph_laplacian_form(s, rng);
    CHECK(compatibility_residual(e, named::abs(), random_fn(rng, s), random_fn(rng, s)).status ==
          Status::satisfied);
  }

  auto neg = crafted_negative_control();
  auto two = neg.space();
  const auto r = compatibility_residual(neg, PiecewiseLinear::linear(0.5), Fn(two, {1, 0}), Fn(two, {1, 0}));
  CHECK(r.lhs == 1.5);
  CHECK(r.rhs == 1.0);
  CHECK(r.slack == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.status == Status::violated);

  CHECK_THROWS_AS(compatibility_residual(neg, PiecewiseLinear::linear(2.0), Fn(two, {1, 0}), Fn(two, {1, 0})),
                  InvalidArgument);
  CHECK_THROWS_AS(compatibility_residual(neg, PiecewiseLinear::linear(0.5, 1.0), Fn(two, {1, 0}), Fn(two, {1, 0})),
                  InvalidArgument);
}

TEST_CASE("Cipriani-Grillo residuals") {
  Rng rng(2);
  auto s = random_space(rng, {.nodes = 4});
  auto e = random_mixed_energy(rng, s, {.nodes = 4, .mix = {EdgeFunction::Kind::power}, .p_min = 2, .p_max = 2});
  Fn u = random_fn(rng, s);
  auto [a, b] = cg_residuals(e, u, u, 0.7);
  CHECK(a.slack == 0.0);
  CHECK(b.slack == 0.0);
  for (int i = 0; i < 500; ++i) {
    Fn v = random_fn(rng, s), w = random_fn(rng, s);
    auto [r1, r2] = cg_residuals(e, v, w, rng.log_uniform(1e-2, 10));
    CHECK(r1.status == Status::satisfied);
    CHECK(r2.status == Status::satisfied);
  }
  auto [z1, z2] = cg_residuals(make_zero_energy(s), u, random_fn(rng, s), 1.0);
  CHECK(z1.slack == 0.0);
  CHECK(z2.slack == 0.0);
  CHECK_THROWS_AS(cg_residuals(e, u, u, 0.0), InvalidArgument);
  CHECK_THROWS_AS(cg_residuals(e, u, u, -1.0), InvalidArgument);

  // Closed form of the projection maps: unchanged inside the band, midpoint +- alpha/2 outside.
  auto one = FiniteMeasureSpace::counting(3);
  auto [p1, p2] = cg_projection(Fn(one, {0.5, 5, -5}), Fn(one, {0, 0, 0}), 1.0);
  CHECK(p1 == Fn(one, {0.5, 3.0, -3.0}));
  CHECK(p2 == Fn(one, {0.0, 2.0, -2.0}));
}

TEST_CASE("Benilan-Picard residual") {
  Rng rng(3);
  auto s = random_space(rng, {.nodes = 5});
  auto e = random_mixed_energy(rng, s, {.nodes = 5});
  for (int i = 0; i < 100; ++i) {
    Fn u = feasible_point(e, random_fn(rng, s)), v = feasible_point(e, random_fn(rng, s));
    CHECK(bp_star_residual(e, named::zero(), u, v).slack == 0.0);
    const auto id = bp_star_residual(e, named::identity(), u, v);
    // u - (u - v) and v + (u - v) round, so the swap is exact only up to ulps.
    CHECK(std::abs(id.slack) <= 1e-12 * std::max(1.0, id.rhs.value()));
    const auto p = random_increasing_normal_pwl(rng);
    const auto a = bp_star_residual(e, p, u, v);
    const auto b = compatibility_residual(e, contraction_from_bp(p), 0.5 * (u + v), 0.5 * (u - v));
    CHECK(a.status == Status::satisfied);
    CHECK(std::abs(a.slack - b.slack) <= 1e-10 * std::max(1.0, a.rhs.value()));
  }
  Fn u = random_fn(rng, s);
  CHECK_THROWS_AS(bp_star_residual(e, named::negation(), u, u), InvalidArgument);
  CHECK_THROWS_AS(bp_star_residual(e, named::abs(), u, u), InvalidArgument);
}

TEST_CASE("Brigati-Hartarsky residuals") {
  Rng rng(4);
  auto s = random_space(rng, {.nodes = 4});
  auto q = graph_laplacian_form(s, rng);
  Fn f = random_fn(rng, s), g = random_fn(rng, s);
  auto [a0, b0] = bh_residuals(q, f, f, 0.3);
  CHECK(a0.slack == 0.0);
  CHECK(b0.slack == 0.0);
  CHECK(bh_residuals(q, f, g, 0.0).second.slack == 0.0);
  for (int i = 0; i < 500; ++i) {
    auto [ra, rb] = bh_residuals(q, random_fn(rng, s), random_fn(rng, s), rng.log_uniform(1e-2, 10));
    CHECK(ra.status == Status::satisfied);
    CHECK(rb.status == Status::satisfied);
  }
  CHECK_THROWS_AS(bh_residuals(q, f, g, -0.1), InvalidArgument);
}

TEST_CASE("identity checks on dense grids and random functions") {
  Rng rng(5);
  IdentityInputs in;
  in.grid = dense_grid(1000, -10, 10);
  auto s = FiniteMeasureSpace::counting(8);
  for (int i = 0; i < 100; ++i) in.pairs.emplace_back(uniform_fn(rng, s, -10, 10), uniform_fn(rng, s, -10, 10));

  for (int rep = 0; rep < 20; ++rep) {
    in.alpha = rng.log_uniform(1e-2, 1e1);
    in.x = rng.uniform(0, 5);
    in.x1 = rng.uniform(0, 3);
    in.x2 = in.x1 + rng.uniform(1e-3, 3);
    in.p = random_increasing_normal_pwl(rng);
    for (auto kind : all_identity_kinds()) {
      if (kind == IdentityKind::case3_ids) continue;
      CAPTURE(identity_name(kind));
      CHECK(identity_check(kind, in) <= 1e-12);
    }
    IdentityInputs in3 = in;
    in3.x1 = -rng.uniform(1e-3, 5);
    in3.x2 = rng.uniform(1e-3, 5);
    CHECK(identity_check(IdentityKind::case3_ids, in3) <= 1e-12);
  }

  IdentityInputs ex;
  ex.grid = dense_grid(1001, -5, 5);
  ex.x1 = -1;
  ex.x2 = 2;
  CHECK(identity_check(IdentityKind::case3_ids, ex) == 0.0);
  ex.alpha = 1;
  ex.grid = dense_grid(1000, -10, 10);
  CHECK(identity_check(IdentityKind::cg_palpha, ex) <= 1e-12);
  IdentityInputs same;
  Fn f = uniform_fn(rng, s, -3, 3);
  same.pairs.emplace_back(f, f);
  CHECK(identity_check(IdentityKind::bh_veewedge, same) == 0.0);

  // Boundary parameters.
  IdentityInputs edge;
  edge.grid = dense_grid(1000, -10, 10);
  edge.x = 0;
  edge.x1 = 0;
  edge.x2 = 1e-6;
  edge.alpha = 0;
  CHECK(identity_check(IdentityKind::case1_ids, edge) <= 1e-12);
  CHECK(identity_check(IdentityKind::case2_ids, edge) <= 1e-12);
  CHECK(identity_check(IdentityKind::bh_halpha, edge) <= 1e-12);

  CHECK_THROWS_AS(identity_from_name("nope"), InvalidArgument);
  IdentityInputs bad;
  bad.x = -1;
  CHECK_THROWS_AS(identity_check(IdentityKind::case1_ids, bad), InvalidArgument);
  bad.x1 = 1;
  bad.x2 = 0.5;
  CHECK_THROWS_AS(identity_check(IdentityKind::case2_ids, bad), InvalidArgument);
  CHECK_THROWS_AS(identity_check(IdentityKind::case3_ids, bad), InvalidArgument);
}

TEST_CASE("the literal case-3 formula is not a contraction") {
  // -t - 2(t - x1)_+ + 2(t - x2)_+ has slope -3 between x1 and x2.
  const double x1 = -1, x2 = 2;
  auto literal = [&](double t) { return -t - 2 * std::max(t - x1, 0.0) + 2 * std::max(t - x2, 0.0); };
  CHECK(std::abs(literal(1.0) - literal(0.0)) == doctest::Approx(3.0));
  CHECK(verify_normal(named::phi(x1, x2)).ok);
}

TEST_CASE("lemma chains") {
  Rng rng(6);
  auto s = FiniteMeasureSpace::counting(4);
  auto q = graph_laplacian_form(s, rng);
  for (int i = 0; i < 50; ++i) {
    Fn f = random_fn(rng, s), g = random_fn(rng, s);
    for (const auto& r : lemma_chain_check(LemmaKind::case1, q, f, g, {.x = 1.0})) {
      CAPTURE(r.name);
      CHECK(r.residual.status == Status::satisfied);
    }
  }

  auto zero = make_zero_energy(s);
  Fn f = random_fn(rng, s), g = random_fn(rng, s);
  for (auto kind : {LemmaKind::case1, LemmaKind::case2, LemmaKind::case3, LemmaKind::convexity_via_Dn}) {
    const LemmaParams params{.x = 0.7, .x1 = kind == LemmaKind::case3 ? -0.5 : 0.5, .x2 = 2.0, .n = 2};
    for (const auto& r : lemma_chain_check(kind, zero, f, g, params)) CHECK(r.residual.slack == 0.0);
  }

  const auto dn = lemma_chain_check(LemmaKind::convexity_via_Dn, q, f, g, {.n = 3});
  CHECK(dn.size() == 9);
  CHECK(dn.back().name == "midpoint");
  CHECK(dn.back().residual.slack >= -1e-9);

  // Random convex energies, every parameter regime including mirrored ones.
  for (int trial = 0; trial < 200; ++trial) {
    EnergySpec spec{.nodes = 2 + rng.below(5)};
    auto sp = random_space(rng, spec);
    auto e = random_mixed_energy(rng, sp, spec);
    Fn ff = feasible_point(e, random_fn(rng, sp));
    Fn gg = random_fn(rng, sp);
    if (rng.bernoulli(0.5)) gg = feasible_direction(e, ff, gg);
    double a = rng.uniform(0, 3), b = a + rng.uniform(1e-3, 3);
    const bool neg = rng.bernoulli(0.5);
    std::vector<std::pair<LemmaKind, LemmaParams>> runs = {
        {LemmaKind::case1, {.x = rng.uniform(-3, 3)}},
        {LemmaKind::case2, {.x1 = neg ? -b : a, .x2 = neg ? -a : b}},
        {LemmaKind::case3, {.x1 = -rng.uniform(1e-3, 3), .x2 = rng.uniform(1e-3, 3)}},
        {LemmaKind::convexity_via_Dn, {.n = static_cast<unsigned>(rng.below(4))}},
    };
    for (const auto& [kind, params] : runs) {
      for (const auto& r : lemma_chain_check(kind, e, ff, gg, params)) {
        CAPTURE(lemma_name(kind));
        CAPTURE(r.name);
        CHECK(r.residual.status != Status::violated);
      }
    }
  }
  CHECK_THROWS_AS(lemma_chain_check(LemmaKind::case2, q, f, g, {.x1 = -1, .x2 = 1}), InvalidArgument);
  CHECK_THROWS_AS(lemma_chain_check(LemmaKind::case3, q, f, g, {.x1 = 1, .x2 = 2}), InvalidArgument);
  CHECK_THROWS_AS(lemma_from_name("case4"), InvalidArgument);
}

TEST_CASE("homogeneous reduction") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const double p = rng.uniform(1, 4);
    EnergySpec spec{.nodes = 2 + rng.below(5), .mix = {EdgeFunction::Kind::power}, .p_min = p, .p_max = p};
    auto s = random_space(rng, spec);
    auto e = random_mixed_energy(rng, s, spec);
    Fn f = random_fn(rng, s), g = random_fn(rng, s);
    const auto r = homogeneous_reduction_check(e, f, g, rng.log_uniform(1e-2, 1e1), p);
    CHECK(r.status == Status::satisfied);
    CHECK(homogeneous_reduction_check(e, f, g, 1.0, p).slack == 0.0);
  }
  auto s = FiniteMeasureSpace::counting(3);
  Fn f = random_fn(rng, s), g = random_fn(rng, s);
  CHECK(homogeneous_reduction_check(make_zero_energy(s), f, g, 2.5, 3.0).slack == 0.0);
  auto hub = make_mixed_energy(s, {{0, 1, EdgeFunction::huber(1)}});
  CHECK_THROWS_AS(homogeneous_reduction_check(hub, f, g, 2.0, 2.0), InvalidArgument);
}

TEST_CASE("fuzz sweep") {
  Rng rng(8);
  auto s = random_space(rng, {.nodes = 5});
  auto e = random_mixed_energy(rng, s, {.nodes = 5});

  SweepConfig empty{.seed = 1, .n_samples = 0};
  CHECK(fuzz_sweep(e, empty).checks.empty());

  SweepConfig cfg{.seed = 42, .n_samples = 150};
  const Report r1 = fuzz_sweep(e, cfg, "random");
  const Report r2 = fuzz_sweep(e, cfg, "random");
  CHECK(r1.violations() == 0);
  REQUIRE(r1.checks.size() == r2.checks.size());
  for (std::size_t i = 0; i < r1.checks.size(); ++i) {
    CHECK(r1.checks[i].name == r2.checks[i].name);
    CHECK(r1.checks[i].n == r2.checks[i].n);
    CHECK(r1.checks[i].violations == r2.checks[i].violations);
    CHECK(r1.checks[i].worst_index == r2.checks[i].worst_index);
    CHECK(r1.checks[i].min_slack == r2.checks[i].min_slack);
  }
  for (std::size_t i = 1; i < r1.checks.size(); ++i) CHECK(r1.checks[i - 1].name < r1.checks[i].name);

  // Every worst case re-evaluates to the recorded residual.
  for (const auto& c : r1.checks) {
    if (!c.worst) continue;
    bool found = false;
    for (const auto& nr : evaluate_check(c.check, e, *c.worst, cfg.tol)) {
      if (nr.name != c.name) continue;
      found = true;
      CHECK(nr.residual.slack == c.min_slack);
    }
    CHECK(found);
  }

  SweepConfig other = cfg;
  other.seed = 43;
  CHECK(fuzz_sweep(e, other).checks.front().worst_index != std::nullopt);

  CHECK_THROWS_AS(fuzz_sweep(e, {.n_samples = 1, .checks = {"nope"}}), ConfigError);
}

TEST_CASE("negative controls are caught") {
  auto neg = crafted_negative_control();
  const Report r = fuzz_sweep(neg, {.seed = 9, .n_samples = 2000, .checks = {"compat_named", "compat_random"}});
  CHECK(r.violations() > 0);

  Rng rng(10);
  auto s = random_space(rng, {.nodes = 4});
  auto e = random_mixed_energy(rng, s, {.nodes = 4, .nonconvex = true});
  const Report r2 = fuzz_sweep(e, {.seed = 11, .n_samples = 2000, .checks = {"compat_named", "midpoint"}});
  CHECK(r2.violations() > 0);
}

TEST_CASE("sweeps on forced-equality edges stay inside the domain") {
  auto space = FiniteMeasureSpace::weighted({1.0, 3.0});
  auto e = make_mixed_energy(space, {{0, 1, EdgeFunction::interval_indicator(0.0)}});
  SweepConfig cfg;
  cfg.seed = 2;
  cfg.n_samples = 500;
  cfg.checks = {"compat_random", "composition", "midpoint"};
  CHECK(fuzz_sweep(e, cfg).violations() == 0);

  const Fn f(space, {0.2087579799657646, 0.2087579799657646});
  const Fn g(space, {-3.2e-17, -1.4e-17});
  const Fn d = feasible_direction(e, f, g);
  CHECK(d[0] == d[1]);
}
