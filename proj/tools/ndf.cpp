#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ndf/contraction.hpp"
#include "ndf/error.hpp"
#include "ndf/harness.hpp"

using namespace ndf;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
  double tol = 1e-9;
  std::vector<std::string> instances;
  std::string out;
  std::string format = "json";
  std::vector<std::string> checks;
};

void add_common(CLI::App* cmd, Common& c, bool with_checks = true) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--samples", c.samples, "Samples per check")->capture_default_str();
  cmd->add_option("--tol", c.tol, "Absolute tolerance")->capture_default_str();
  cmd->add_option("--instance", c.instances, "Instance file, family name or JSON spec (repeatable)");
  cmd->add_option("--out", c.out, "Report path");
  cmd->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  if (with_checks) cmd->add_option("--checks", c.checks, "Comma separated check names")->delimiter(',');
}

// Inline list "1,-1", JSON array, or a file holding either (or {"values": [...]}).
Fn read_fn(const std::string& source, const SpacePtr& space) {
  std::string text = source;
  std::error_code ec;
  if (std::filesystem::is_regular_file(source, ec)) {
    std::ifstream in(source);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  const auto first = text.find_first_not_of(" \t\n\r");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    try {
      return fn_from_json(space, Json::parse(text));
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("input: ") + e.what());
    }
  }
  Json values = Json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t\n\r", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("input: not a number: '" + item + "'");
    }
  }
  return fn_from_json(space, values);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(out);
  if (!os) throw ConfigError("cannot write " + out);
  os << text;
}

void print_summary(const SuiteResult& result) {
  for (const auto& run : result.runs) {
    std::cerr << run.instance.name << (run.instance.negative_control ? " (negative control)" : "") << ": "
              << run.report.checks.size() << " residual kinds, " << run.report.violations() << " violations, "
              << run.report.vacuous() << " vacuous\n";
    for (const auto& c : run.report.checks) {
      if (c.violations == 0) continue;
      std::cerr << "  " << c.name << ": " << c.violations << "/" << c.n << " violated, worst slack " << c.min_slack
                << " at sample " << *c.worst_index << "\n";
    }
  }
}

int run_verify(const Common& c, bool fuzz) {
  SuiteConfig cfg;
  cfg.seed = c.seed;
  cfg.n_samples = c.samples;
  cfg.tol.atol = c.tol;
  cfg.checks = c.checks;
  cfg.instances = c.instances;
  if (fuzz && cfg.instances.empty()) {
    cfg.instances = {"negative_control", R"({"nodes": 4, "nonconvex": true})"};
  }
  cfg.out = c.out;
  cfg.format = c.format;
  const auto result = run_suite(cfg);
  print_summary(result);
  if (c.out.empty()) {
    std::cout << (c.format == "json" ? suite_to_json(cfg, result).dump(2) + "\n" : suite_to_csv(result));
  }
  if (fuzz && result.expected_violations() == 0) std::cerr << "no violation found on the negative controls\n";
  return result.exit_code;
}

int run_identities(const Common& c) {
  const double tol = c.tol;
  Json kinds = Json::array();
  bool ok = true;
  for (const auto& r : identity_suite(c.seed, c.samples)) {
    const bool pass = r.max_deviation <= tol;
    ok = ok && pass;
    kinds.push_back({{"kind", identity_name(r.kind)}, {"max_deviation", r.max_deviation}, {"pass", pass}});
    std::cerr << identity_name(r.kind) << ": " << r.max_deviation << (pass ? "" : "  FAIL") << "\n";
  }
  if (c.format == "csv") {
    std::ostringstream os;
    os << std::setprecision(17) << "kind,max_deviation,pass\n";
    for (const auto& k : kinds) {
      os << k["kind"].get<std::string>() << ',' << k["max_deviation"].get<double>() << ','
         << (k["pass"].get<bool>() ? 1 : 0) << '\n';
    }
    emit(c.out, os.str());
  } else {
    Json doc{{"schema_version", Report::kSchemaVersion},
             {"seed", c.seed},
             {"samples", c.samples},
             {"tolerance", tol},
             {"identities", kinds}};
    emit(c.out, doc.dump(2) + "\n");
  }
  return ok ? kExitPass : kExitViolations;
}

struct Solve {
  std::string input;
  double lambda = 1.0;
  double t = 1.0;
  int steps = 10;
  double tolerance = 1e-8;
  int max_iterations = 20000;
  std::string strategy = "automatic";
};

Instance single_instance(const Common& c) {
  if (c.instances.size() > 1) throw ConfigError("give a single --instance");
  return load_instance(c.instances.empty() ? "two_node_quadratic" : c.instances.front(), c.seed);
}

SolverConfig solver_of(const Solve& s) {
  return {.tolerance = s.tolerance, .max_iterations = s.max_iterations, .strategy = strategy_from_name(s.strategy)};
}

int run_resolve(const Common& c, const Solve& s) {
  const Instance inst = single_instance(c);
  if (s.input.empty()) throw ConfigError("--input is required");
  const Fn f = read_fn(s.input, inst.energy.space());
  const auto r = resolvent(inst.energy, s.lambda, f, solver_of(s));
  Json doc{{"schema_version", Report::kSchemaVersion},
           {"instance", inst.name},
           {"lambda", s.lambda},
           {"input", to_json(f)},
           {"minimizer", to_json(r.minimizer)},
           {"objective", number_to_json(r.objective)},
           {"optimality_residual", number_to_json(r.optimality_residual)},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"strategy", strategy_name(r.strategy)}};
  emit(c.out, doc.dump(2) + "\n");
  return r.converged ? kExitPass : kExitViolations;
}

int run_evolve(const Common& c, const Solve& s) {
  const Instance inst = single_instance(c);
  if (s.input.empty()) throw ConfigError("--input is required");
  const Fn f = read_fn(s.input, inst.energy.space());
  const auto r = evolve(inst.energy, s.t, s.steps, f, solver_of(s));
  Json energies = Json::array();
  for (double e : r.energies) energies.push_back(number_to_json(e));
  Json doc{{"schema_version", Report::kSchemaVersion},
           {"instance", inst.name},
           {"t", s.t},
           {"steps", s.steps},
           {"input", to_json(f)},
           {"state", to_json(r.state)},
           {"energies", std::move(energies)},
           {"max_residual", number_to_json(r.max_residual)},
           {"converged", r.converged}};
  emit(c.out, doc.dump(2) + "\n");
  return r.converged ? kExitPass : kExitViolations;
}

int run_demo() {
  auto two = FiniteMeasureSpace::counting(2);
  const Fn f(two, {1.0, -1.0});
  std::cout << std::setprecision(10);

  const auto quad = load_instance("two_node_quadratic", 0);
  std::cout << "two-node quadratic E(g) = (g0 - g1)^2, f = (1, -1)\n";
  for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
    const auto r = resolvent(quad.energy, lambda, f);
    std::cout << "  J_" << lambda << " f difference " << r.minimizer[0] - r.minimizer[1] << " (exact "
              << 2.0 / (1.0 + 4.0 * lambda) << ")\n";
  }
  const auto ev = evolve(quad.energy, 0.25, 100, f);
  std::cout << "  100 implicit Euler steps to t = 0.25: difference " << ev.state[0] - ev.state[1] << " (flow limit "
            << 2.0 * std::exp(-1.0) << ")\n";

  const auto ind = load_instance("two_node_indicator", 0);
  const auto& sp = ind.energy.space();
  const Fn h(sp, {2.0, 6.0});
  const auto r = resolvent(ind.energy, 1.0, h);
  std::cout << "two-node indicator, weights (1, 3), f = (2, 6): J f = (" << r.minimizer[0] << ", " << r.minimizer[1]
            << "), weighted mean 5\n";

  const auto [p, q] = band_projection(Fn(FiniteMeasureSpace::counting(1), {4.0}),
                                      Fn(FiniteMeasureSpace::counting(1), {0.0}), 0.0, 1.0);
  std::cout << "band projection of (4, 0) onto {0 <= u - v <= 2}: (" << p[0] << ", " << q[0] << ")\n";

  for (unsigned n = 0; n <= 3; ++n) {
    const auto d = build_Dn(n);
    double sup = 0.0;
    const double r3 = std::pow(3.0, n + 1);
    for (int i = 0; i <= 10000; ++i) sup = std::max(sup, std::abs(d(-r3 + 2.0 * r3 * i / 10000.0)));
    std::cout << "D_" << n << ": " << d.breakpoints().size() << " breakpoints, sup |D_n| " << sup << " <= 3^-" << n
              << " = " << std::pow(3.0, -static_cast<double>(n)) << "\n";
  }

  const auto neg = load_instance("negative_control", 0);
  const Fn nf(two, {1.0, 0.0});
  const auto res = compatibility_residual(neg.energy, PiecewiseLinear::linear(0.5), nf, nf);
  std::cout << "negative control b(t) = min(|t|, 1), f = g = (1, 0), C(t) = t/2: slack " << res.slack << " ("
            << status_name(res.status) << ")\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Dirichlet form laboratory"};
  app.require_subcommand(1);

  Common verify_opts, fuzz_opts, id_opts, resolve_opts, evolve_opts;
  Solve solve_opts, evolve_solve;
  verify_opts.samples = 1000;
  id_opts.samples = 100;
  id_opts.tol = 1e-12;

  auto* verify = app.add_subcommand("verify", "Criteria and resolvent sweeps");
  add_common(verify, verify_opts);
  auto* fuzz = app.add_subcommand("fuzz", "Sweeps on negative-control instances");
  add_common(fuzz, fuzz_opts);
  auto* identities = app.add_subcommand("identities", "Exact identity checks");
  add_common(identities, id_opts, false);

  auto add_solver = [](CLI::App* cmd, Solve& s) {
    cmd->add_option("--input", s.input, "Initial function: list, JSON array or file");
    cmd->add_option("--solver-tol", s.tolerance, "Solver tolerance")->capture_default_str();
    cmd->add_option("--max-iterations", s.max_iterations, "Solver iteration cap")->capture_default_str();
    cmd->add_option("--strategy", s.strategy, "Solver strategy")->capture_default_str();
  };
  auto* resolve = app.add_subcommand("resolve", "Resolvent J_lambda f");
  add_common(resolve, resolve_opts, false);
  add_solver(resolve, solve_opts);
  resolve->add_option("--lambda", solve_opts.lambda, "Step size")->capture_default_str();

  auto* evolve_cmd = app.add_subcommand("evolve", "Iterated resolvent (implicit Euler)");
  add_common(evolve_cmd, evolve_opts, false);
  add_solver(evolve_cmd, evolve_solve);
  evolve_cmd->add_option("--t", evolve_solve.t, "Final time")->capture_default_str();
  evolve_cmd->add_option("--steps", evolve_solve.steps, "Number of steps")->capture_default_str();

  auto* demo = app.add_subcommand("demo", "Worked examples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (*verify) return run_verify(verify_opts, false);
    if (*fuzz) return run_verify(fuzz_opts, true);
    if (*identities) return run_identities(id_opts);
    if (*resolve) return run_resolve(resolve_opts, solve_opts);
    if (*evolve_cmd) return run_evolve(evolve_opts, evolve_solve);
    if (*demo) return run_demo();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
