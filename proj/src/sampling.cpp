#include "ndf/sampling.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "ndf/error.hpp"

namespace ndf {

Fn uniform_fn(Rng& rng, const SpacePtr& space, double lo, double hi) {
  std::vector<double> v(space->size());
  for (double& x : v) x = rng.uniform(lo, hi);
  return Fn(space, std::move(v));
}

Fn random_fn(Rng& rng, const SpacePtr& space, const ValueDistribution& dist) {
  const double r = rng.bernoulli(dist.heavy_rate) ? dist.heavy : dist.bulk;
  return uniform_fn(rng, space, -r, r);
}

namespace {

std::vector<double> random_breakpoints(Rng& rng, int max_breakpoints) {
  const auto k = rng.below(static_cast<std::uint64_t>(max_breakpoints) + 1);
  std::vector<double> b(k);
  for (double& x : b) x = rng.uniform(-3.0, 3.0);
  std::sort(b.begin(), b.end());
  return b;
}

// Slopes hitting the exact regime boundaries often, otherwise uniform on [lo, hi].
double random_slope(Rng& rng, double lo, double hi) {
  static constexpr std::array<double, 5> kSpecial{-1.0, -0.5, 0.0, 0.5, 1.0};
  if (rng.bernoulli(0.3)) {
    const double s = kSpecial[rng.below(kSpecial.size())];
    if (s >= lo && s <= hi) return s;
  }
  return rng.uniform(lo, hi);
}

}  // namespace

PiecewiseLinear random_pwl(Rng& rng, int max_breakpoints) {
  auto b = random_breakpoints(rng, max_breakpoints);
  std::vector<double> s(b.size() + 1);
  for (double& x : s) x = rng.uniform(-3.0, 3.0);
  return PiecewiseLinear::from_slopes(std::move(b), std::move(s), rng.uniform(-3.0, 3.0));
}

PiecewiseLinear random_normal_pwl(Rng& rng, int max_breakpoints) {
  auto b = random_breakpoints(rng, max_breakpoints);
  std::vector<double> s(b.size() + 1);
  for (double& x : s) x = random_slope(rng, -1.0, 1.0);
  return PiecewiseLinear::from_slopes(std::move(b), std::move(s), 0.0);
}

PiecewiseLinear random_increasing_normal_pwl(Rng& rng, int max_breakpoints) {
  auto b = random_breakpoints(rng, max_breakpoints);
  std::vector<double> s(b.size() + 1);
  for (double& x : s) x = random_slope(rng, 0.0, 1.0);
  return PiecewiseLinear::from_slopes(std::move(b), std::move(s), 0.0);
}

}  // namespace ndf

namespace ndf {

SpacePtr random_space(Rng& rng, const EnergySpec& spec) {
  std::vector<double> w(spec.nodes);
  for (double& x : w) x = rng.uniform(spec.weight_min, spec.weight_max);
  return FiniteMeasureSpace::weighted(std::move(w));
}

EdgeFunction random_edge_function(Rng& rng, EdgeFunction::Kind kind, const EnergySpec& spec) {
  using Kind = EdgeFunction::Kind;
  switch (kind) {
    case Kind::power: {
      if (rng.bernoulli(0.3)) {
        const double p = rng.bernoulli(0.5) ? 1.0 : 2.0;
        if (p >= spec.p_min && p <= spec.p_max) return EdgeFunction::power(p);
      }
      return EdgeFunction::power(rng.uniform(spec.p_min, spec.p_max));
    }
    case Kind::huber:
      return EdgeFunction::huber(rng.uniform(0.2, 2.0));
    case Kind::interval_indicator:
      return EdgeFunction::interval_indicator(rng.uniform(0.5, 4.0));
    case Kind::quadratic_weighted:
      return EdgeFunction::quadratic_weighted(rng.uniform(0.0, 2.0));
    case Kind::pwl_convex: {
      const auto k = rng.below(4);
      std::vector<double> pos(k), right(k + 1);
      for (double& x : pos) x = rng.uniform(0.1, 3.0);
      for (double& s : right) s = rng.uniform(0.0, 2.0);
      std::sort(pos.begin(), pos.end());
      std::sort(right.begin(), right.end());
      std::vector<double> bps, slopes;
      for (auto i = k; i-- > 0;) bps.push_back(-pos[i]);
      bps.push_back(0.0);
      for (double x : pos) bps.push_back(x);
      for (auto i = k + 1; i-- > 0;) slopes.push_back(-right[i]);
      for (double s : right) slopes.push_back(s);
      return EdgeFunction::pwl_convex(PiecewiseLinear::from_slopes(std::move(bps), std::move(slopes), 0.0));
    }
    case Kind::truncated_abs:
      return EdgeFunction::truncated_abs(rng.uniform(0.5, 2.0));
    case Kind::shifted:
      break;
  }
  throw InvalidArgument("random_edge_function: unsupported kind");
}

EnergyFunctional random_mixed_energy(Rng& rng, const SpacePtr& space, const EnergySpec& spec) {
  if (spec.mix.empty()) throw InvalidArgument("random_mixed_energy: empty edge mix");
  const std::size_t n = space->size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (x != y && rng.bernoulli(spec.density)) pairs.emplace_back(x, y);
    }
  }
  if (pairs.empty() && n >= 2) {
    const auto x = rng.below(n);
    const auto y = (x + 1 + rng.below(n - 1)) % n;
    pairs.emplace_back(x, y);
  }
  std::vector<Edge> edges;
  for (auto [x, y] : pairs) {
    const auto kind = spec.mix[rng.below(spec.mix.size())];
    edges.push_back({x, y, random_edge_function(rng, kind, spec)});
  }
  if (spec.nonconvex && !edges.empty()) {
    const auto forced = rng.below(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (i == forced || rng.bernoulli(0.3)) edges[i].b = EdgeFunction::truncated_abs(rng.uniform(0.5, 2.0));
    }
    return make_negative_control_energy(space, std::move(edges));
  }
  return make_mixed_energy(space, std::move(edges));
}

}  // namespace ndf
