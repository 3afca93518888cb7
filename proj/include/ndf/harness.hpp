#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndf/criteria.hpp"
#include "ndf/io.hpp"
#include "ndf/resolvent.hpp"
#include "ndf/sampling.hpp"

namespace ndf {

enum ExitCode : int { kExitPass = 0, kExitViolations = 1, kExitConfigError = 2, kExitExpectedViolation = 3 };

/// Generator description.
///
/// family is one of "random", "two_node_quadratic", "two_node_indicator" or
/// "negative_control". path_edge, when set, replaces the random graph by a
/// path on `nodes` points carrying that edge function.
struct InstanceSpec {
  std::string family = "random";
  EnergySpec energy;
  std::optional<EdgeFunction> path_edge;
};

struct Instance {
  std::string name;
  EnergyFunctional energy;
  /// Nonconvex energy: violations are expected rather than failures.
  bool negative_control = false;
};

/// Accepts a family name or an object with optional keys family, nodes, mix
/// (edge kind names), density, weights [lo, hi], p [lo, hi], nonconvex and
/// edges (e.g. "power2", "huber1", "indicator0.5").
InstanceSpec parse_instance_spec(const Json& j);
Instance generate_instance(const InstanceSpec& spec, std::uint64_t seed);

/// source: path to an instance file, a family name, or an inline JSON spec.
Instance load_instance(const std::string& source, std::uint64_t seed);

Json instance_to_json(const Instance& inst);
Instance instance_from_json(const Json& j);

struct SuiteConfig {
  std::uint64_t seed = 0;
  std::size_t n_samples = 1000;
  Tolerance tol;
  /// Empty means every applicable check.
  std::vector<std::string> checks;
  /// Empty means the canonical instances.
  std::vector<std::string> instances;
  SolverConfig solver;
  /// Nothing is written when empty.
  std::string out;
  std::string format = "json";
};

struct InstanceReport {
  Instance instance;
  Report report;
};

struct SuiteResult {
  /// In the order of SuiteConfig::instances.
  std::vector<InstanceReport> runs;
  int exit_code = kExitPass;

  std::size_t violations() const;
  std::size_t expected_violations() const;
};

/// Checks run by the suite: check_names() plus "resolvent" (convex instances only).
const std::vector<std::string>& suite_check_names();
const std::vector<std::string>& canonical_instances();

Witness sample_suite_witness(std::string_view check, const EnergyFunctional& e, const SweepConfig& cfg,
                             std::size_t index);
std::vector<NamedResidual> evaluate_suite_check(std::string_view check, const EnergyFunctional& e, const Witness& w,
                                                const Tolerance& tol, const SolverConfig& solver = {});

/// Runs the enabled checks on every instance; writes cfg.out if set.
/// Throws ConfigError (or std::ios_base::failure) on bad configuration or I/O.
SuiteResult run_suite(const SuiteConfig& cfg);

Json suite_to_json(const SuiteConfig& cfg, const SuiteResult& result);
std::string suite_to_csv(const SuiteResult& result);

struct IdentityResult {
  IdentityKind kind;
  double max_deviation = 0.0;
};

/// Every identity kind on a grid of [-10, 10] and n_random random pairs on 16
/// points, maximized over a few admissible parameter choices per kind.
std::vector<IdentityResult> identity_suite(std::uint64_t seed, std::size_t n_random, std::size_t grid_points = 1000);

/// Re-evaluates the recorded worst case of every summary from a suite JSON
/// document and returns the largest |slack difference| to the recorded one.
double replay_worst_cases(const Json& suite);

}  // namespace ndf
