#pragma once

#include <limits>
#include <string_view>
#include <vector>

#include "ndf/criteria.hpp"
#include "ndf/functional.hpp"
#include "ndf/measure_space.hpp"

namespace ndf {

enum class SolverStrategy {
  /// Exact averaging when every edge forces equality, Newton for smooth
  /// energies, dual FISTA otherwise.
  automatic,
  proximal_gradient_backtracking,
  newton_backtracking,
  /// Accelerated proximal gradient on the edge-wise dual; certificate from the duality gap.
  dual_fista,
  subgradient_diminishing,
  projected_exact_for_indicators,
};

std::string_view strategy_name(SolverStrategy s);
SolverStrategy strategy_from_name(std::string_view name);

struct SolverConfig {
  double tolerance = 1e-8;
  int max_iterations = 20000;
  SolverStrategy strategy = SolverStrategy::automatic;
};

/// optimality_residual r bounds the distance to the exact minimizer:
/// ||minimizer - J f||_m <= lambda * r.
struct ResolventResult {
  Fn minimizer;
  double objective = 0.0;
  double optimality_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  SolverStrategy strategy = SolverStrategy::automatic;
};

/// argmin_g E(g) + ||f - g||_m^2 / (2 lambda) for convex E.
ResolventResult resolvent(const EnergyFunctional& e, double lambda, const Fn& f, const SolverConfig& cfg = {});

/// The prox objective E(g) + ||f - g||_m^2 / (2 lambda).
ExtReal prox_objective(const EnergyFunctional& e, double lambda, const Fn& f, const Fn& g);

/// (u, v) -> (F + C G, F - C G) with F = (u + v)/2, G = (u - v)/2 and
/// C = a v x ^ b: the product-space projection onto {2a <= u - v <= 2b}.
/// Infinite bounds are allowed.
std::pair<Fn, Fn> band_projection(const Fn& u, const Fn& v, double a = -std::numeric_limits<double>::infinity(),
                                  double b = std::numeric_limits<double>::infinity());

struct EvolveResult {
  Fn state;
  bool converged = true;
  double max_residual = 0.0;
  /// E along the trajectory, starting with E(f).
  std::vector<double> energies;
};

/// steps implicit Euler steps of size t/steps: (J_{t/steps})^steps f.
EvolveResult evolve(const EnergyFunctional& e, double t, int steps, const Fn& f, const SolverConfig& cfg = {});

enum class ResolventProperty { nonexpansive, order_preserving, linfty_band, invariance_0_alpha };

std::string_view property_name(ResolventProperty p);
ResolventProperty property_from_name(std::string_view name);

/// Conclusion of the property with slack atol + 2 lambda (r_u + r_v), divided
/// by sqrt(min m) for pointwise conclusions. Vacuous when the hypothesis fails.
Residual resolvent_property_check(ResolventProperty kind, const EnergyFunctional& e, double lambda, const Fn& u,
                                  const Fn& v, double alpha, const SolverConfig& cfg = {},
                                  const Tolerance& tol = {});
/// Same conclusion from already computed resolvents ju = J u and jv = J v.
Residual resolvent_property_residual(ResolventProperty kind, double lambda, const Fn& u, const Fn& v, double alpha,
                                     const ResolventResult& ju, const ResolventResult& jv, const Tolerance& tol = {});

}  // namespace ndf
