#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ndf/contraction.hpp"
#include "ndf/ext_real.hpp"
#include "ndf/functional.hpp"
#include "ndf/piecewise_linear.hpp"
#include "ndf/rng.hpp"
#include "ndf/sampling.hpp"

namespace ndf {

/// Inequality lhs <= rhs is violated iff slack < -(atol + rtol * |rhs|).
struct Tolerance {
  double atol = 1e-9;
  double rtol = 1e-12;
};

enum class Status { satisfied, violated, vacuous };

std::string_view status_name(Status s);

struct Residual {
  ExtReal lhs;
  ExtReal rhs;
  /// rhs - lhs; +inf when vacuous, -inf when only lhs is infinite.
  double slack = 0.0;
  Status status = Status::satisfied;
};

/// lhs <= rhs under the extended-value rules: vacuous iff rhs = inf.
Residual inequality_residual(ExtReal lhs, ExtReal rhs, const Tolerance& tol = {});
/// |a - b| <= atol + rtol * scale, recorded with slack -|a - b|. Two infinities agree.
Residual equality_residual(ExtReal a, ExtReal b, double scale, const Tolerance& tol);

struct NamedResidual {
  std::string name;
  Residual residual;
};

/// E(f + Cg) + E(f - Cg) <= E(f + g) + E(f - g). C must be normal.
Residual compatibility_residual(const EnergyFunctional& e, const PiecewiseLinear& c, const Fn& f, const Fn& g,
                                const Tolerance& tol = {});

/// The two Cipriani-Grillo inequalities (median pair, then the P_{2,alpha} pair). alpha > 0.
std::pair<Residual, Residual> cg_residuals(const EnergyFunctional& e, const Fn& u, const Fn& v, double alpha,
                                           const Tolerance& tol = {});
/// P^1_{2,alpha}(u, v) and P^2_{2,alpha}(u, v).
std::pair<Fn, Fn> cg_projection(const Fn& u, const Fn& v, double alpha);

/// E(u - p(u - v)) + E(v + p(u - v)) <= E(u) + E(v). p must be increasing normal.
Residual bp_star_residual(const EnergyFunctional& e, const PiecewiseLinear& p, const Fn& u, const Fn& v,
                          const Tolerance& tol = {});

/// Lattice inequality E(f v g) + E(f ^ g) <= E(f) + E(g), then the band
/// inequality E(H_a(f, g)) + E(H_a(g, f)) <= E(f) + E(g). alpha >= 0.
std::pair<Residual, Residual> bh_residuals(const EnergyFunctional& e, const Fn& f, const Fn& g, double alpha,
                                           const Tolerance& tol = {});

enum class IdentityKind {
  cg_median,
  cg_palpha,
  bp_subst,
  bh_veewedge,
  bh_halpha,
  reflection_mean,
  case1_ids,
  case2_ids,
  case3_ids,
};

std::string_view identity_name(IdentityKind kind);
IdentityKind identity_from_name(std::string_view name);
const std::vector<IdentityKind>& all_identity_kinds();

/// Scalar kinds (case*_ids) use the grid and every value of the pairs; pair
/// kinds use the pairs plus (grid, reversed grid) as one more pair.
struct IdentityInputs {
  std::vector<double> grid;
  std::vector<std::pair<Fn, Fn>> pairs;
  double alpha = 1.0;
  /// case1: x >= 0. case2: 0 <= x1 < x2. case3: x1 < 0 < x2.
  double x = 1.0;
  double x1 = 0.5;
  double x2 = 2.0;
  /// bp_subst: increasing normal contraction; defaults to (0 v x ^ 1)/2.
  std::optional<PiecewiseLinear> p;
};

/// Largest absolute deviation between the two sides of every identity of the kind.
double identity_check(IdentityKind kind, const IdentityInputs& inputs);

enum class LemmaKind { case1, case2, case3, convexity_via_Dn };

std::string_view lemma_name(LemmaKind kind);
LemmaKind lemma_from_name(std::string_view name);

struct LemmaParams {
  double x = 1.0;
  double x1 = 0.5;
  double x2 = 2.0;
  unsigned n = 2;
};

/// Every inequality of the chain, its finiteness side conditions, and the
/// target ("target"). Negative thresholds are handled by mirroring g -> -g.
std::vector<NamedResidual> lemma_chain_check(LemmaKind kind, const EnergyFunctional& e, const Fn& f, const Fn& g,
                                             const LemmaParams& params, const Tolerance& tol = {});

/// E_f(0 v g ^ a) = a^p E_{f/a}(0 v g/a ^ 1), relative tolerance rel against
/// the magnitude of the cancelling terms. Throws if E is not p-homogeneous.
Residual homogeneous_reduction_check(const EnergyFunctional& e, const Fn& f, const Fn& g, double alpha, double p,
                                     double rel = 1e-9);

/// Scales f - mean(f) by powers of 1/2 until E(f) < inf.
Fn feasible_point(const EnergyFunctional& e, const Fn& f);
/// Scales g by powers of 1/2 until E(f + g) and E(f - g) are finite. Once g is below rounding
/// scale relative to f, falls back to the constant mean(g), then to zero.
Fn feasible_direction(const EnergyFunctional& e, const Fn& f, const Fn& g);

/// Everything needed to re-evaluate one sampled check on a fixed functional.
struct Witness {
  std::vector<double> f;
  std::vector<double> g;
  std::vector<PiecewiseLinear> maps;
  std::string map_kind;
  double alpha = 0.0;
  double x = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  unsigned n = 0;
};

struct SweepConfig {
  std::uint64_t seed = 0;
  std::size_t n_samples = 1000;
  Tolerance tol;
  ValueDistribution dist;
  /// Fraction of samples pulled into the effective domain before use.
  double feasible_rate = 0.5;
  /// Empty means every check in check_names().
  std::vector<std::string> checks;
};

/// Per-residual aggregate; the worst case is the smallest non-vacuous slack
/// (first sample index on ties).
struct CheckSummary {
  std::string name;
  std::string check;
  std::size_t n = 0;
  std::size_t violations = 0;
  std::size_t vacuous = 0;
  double min_slack = 0.0;
  std::optional<std::size_t> worst_index;
  std::optional<Witness> worst;
  std::optional<Residual> worst_residual;
};

struct Report {
  static constexpr int kSchemaVersion = 1;
  std::uint64_t seed = 0;
  Tolerance tol;
  std::string instance;
  std::size_t n_samples = 0;
  /// Sorted by name.
  std::vector<CheckSummary> checks;

  std::size_t violations() const;
  std::size_t vacuous() const;
};

/// Sweep check names: compat_named, compat_random, cg, bp_star, bh, midpoint,
/// composition, lemma_case1, lemma_case2, lemma_case3, lemma_dn, transport_bp,
/// transport_cg, transport_bh.
const std::vector<std::string>& check_names();

/// Draws the witness for sample `index` of `check` from its own stream.
Witness sample_witness(std::string_view check, const EnergyFunctional& e, const SweepConfig& cfg,
                       std::size_t index);
/// Evaluates one check on a recorded witness.
std::vector<NamedResidual> evaluate_check(std::string_view check, const EnergyFunctional& e, const Witness& w,
                                          const Tolerance& tol);

/// Runs the enabled checks over n_samples witnesses each.
Report fuzz_sweep(const EnergyFunctional& e, const SweepConfig& cfg, std::string instance = {});

/// Folds residuals of one sample into a report (keeps names sorted).
void accumulate(Report& report, std::string_view check, std::size_t index, const Witness& w,
                const std::vector<NamedResidual>& residuals);

}  // namespace ndf
