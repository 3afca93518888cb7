#pragma once

#include <vector>

#include "ndf/functional.hpp"
#include "ndf/measure_space.hpp"
#include "ndf/piecewise_linear.hpp"
#include "ndf/rng.hpp"

namespace ndf {

/// Value distribution for sampled functions: uniform on [-bulk, bulk], except
/// that with probability heavy_rate a whole function is drawn from
/// [-heavy, heavy] instead.
struct ValueDistribution {
  double bulk = 3.0;
  double heavy = 30.0;
  double heavy_rate = 0.1;
};

Fn random_fn(Rng& rng, const SpacePtr& space, const ValueDistribution& dist = {});
Fn uniform_fn(Rng& rng, const SpacePtr& space, double lo, double hi);

/// Arbitrary continuous piecewise-linear map (slopes and anchor unrestricted).
PiecewiseLinear random_pwl(Rng& rng, int max_breakpoints = 6);
/// Random map passing verify_normal.
PiecewiseLinear random_normal_pwl(Rng& rng, int max_breakpoints = 5);
/// Random map passing verify_increasing_normal.
PiecewiseLinear random_increasing_normal_pwl(Rng& rng, int max_breakpoints = 5);

/// Random mixed-energy family: ordered pairs become edges with probability
/// density; edge kinds are drawn uniformly from mix.
struct EnergySpec {
  std::size_t nodes = 4;
  double density = 0.6;
  std::vector<EdgeFunction::Kind> mix{EdgeFunction::Kind::power, EdgeFunction::Kind::huber,
                                      EdgeFunction::Kind::interval_indicator,
                                      EdgeFunction::Kind::quadratic_weighted, EdgeFunction::Kind::pwl_convex};
  double p_min = 1.0;
  double p_max = 4.0;
  /// Point masses uniform on [weight_min, weight_max].
  double weight_min = 0.5;
  double weight_max = 2.0;
  /// Replace some edges (at least one) by truncated_abs.
  bool nonconvex = false;
};

SpacePtr random_space(Rng& rng, const EnergySpec& spec);
EdgeFunction random_edge_function(Rng& rng, EdgeFunction::Kind kind, const EnergySpec& spec = {});
/// Always has at least one edge when nodes >= 2.
EnergyFunctional random_mixed_energy(Rng& rng, const SpacePtr& space, const EnergySpec& spec = {});

}  // namespace ndf
