#include "ndf/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ndf/error.hpp"

namespace ndf {

namespace {

constexpr std::string_view kResolventCheck = "resolvent";

std::pair<double, double> range_of(const Json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(key) + ": expected [lo, hi]");
  const double lo = number_from_json(j[0]);
  const double hi = number_from_json(j[1]);
  if (!(lo <= hi)) throw ConfigError(std::string(key) + ": lo > hi");
  return {lo, hi};
}

EdgeFunction parse_path_edge(const std::string& s) {
  static const std::vector<std::pair<std::string, EdgeFunction (*)(double)>> kinds = {
      {"power", &EdgeFunction::power},
      {"huber", &EdgeFunction::huber},
      {"indicator", &EdgeFunction::interval_indicator},
      {"quadratic", &EdgeFunction::quadratic_weighted},
      {"truncated_abs", &EdgeFunction::truncated_abs},
  };
  for (const auto& [prefix, make] : kinds) {
    if (s.rfind(prefix, 0) != 0) continue;
    const std::string rest = s.substr(prefix.size());
    std::size_t used = 0;
    double param = 0.0;
    try {
      param = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (rest.empty() || used != rest.size()) throw ConfigError("edges: bad parameter in '" + s + "'");
    try {
      return make(param);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("edges: unknown edge function '" + s + "'");
}

Instance two_node(std::string name, std::vector<double> weights, const EdgeFunction& b) {
  auto space = FiniteMeasureSpace::weighted(std::move(weights));
  const bool convex = b.is_convex();
  std::vector<Edge> edges{{0, 1, b}};
  auto e = convex ? make_mixed_energy(space, std::move(edges)) : make_negative_control_energy(space, std::move(edges));
  return {std::move(name), std::move(e), !convex};
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\n\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\n\r") - b + 1);
}

std::vector<std::string> applicable_checks(const SuiteConfig& cfg, const Instance& inst) {
  std::vector<std::string> out;
  const auto& requested = cfg.checks.empty() ? suite_check_names() : cfg.checks;
  for (const auto& name : requested) {
    if (std::find(suite_check_names().begin(), suite_check_names().end(), name) == suite_check_names().end()) {
      throw ConfigError("unknown check: " + name);
    }
    if (name == kResolventCheck && !inst.energy.is_convex()) {
      if (!cfg.checks.empty()) throw ConfigError("check 'resolvent' needs a convex instance: " + inst.name);
      continue;
    }
    out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Json tolerance_json(const Tolerance& tol) {
  return {{"atol", number_to_json(tol.atol)}, {"rtol", number_to_json(tol.rtol)}};
}

}  // namespace

InstanceSpec parse_instance_spec(const Json& j) {
  InstanceSpec spec;
  if (j.is_string()) {
    spec.family = j.get<std::string>();
  } else if (!j.is_object()) {
    throw ConfigError("instance spec must be a name or an object");
  } else {
    static const std::vector<std::string> known = {"family", "nodes", "mix", "density", "weights",
                                                   "p",      "nonconvex", "edges"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown spec key: " + key);
    }
    if (j.contains("family")) spec.family = j.at("family").is_string() ? j.at("family").get<std::string>() : "";
    auto& en = spec.energy;
    if (j.contains("nodes")) {
      const auto& n = j.at("nodes");
      if (!n.is_number_integer() || n.get<std::int64_t>() < 1) throw ConfigError("nodes: expected a positive integer");
      en.nodes = n.get<std::size_t>();
    }
    if (j.contains("mix")) {
      const auto& mix = j.at("mix");
      if (!mix.is_array() || mix.empty()) throw ConfigError("mix: expected a nonempty list of edge kinds");
      en.mix.clear();
      for (const auto& k : mix) {
        if (!k.is_string()) throw ConfigError("mix: expected edge kind names");
        const auto kind = edge_kind_from_name(k.get<std::string>());
        if (kind == EdgeFunction::Kind::shifted || kind == EdgeFunction::Kind::truncated_abs) {
          throw ConfigError("mix: kind not available to the generator: " + k.get<std::string>());
        }
        en.mix.push_back(kind);
      }
    }
    if (j.contains("density")) {
      en.density = number_from_json(j.at("density"));
      if (!(en.density >= 0.0 && en.density <= 1.0)) throw ConfigError("density must lie in [0, 1]");
    }
    if (j.contains("weights")) {
      std::tie(en.weight_min, en.weight_max) = range_of(j.at("weights"), "weights");
      if (!(en.weight_min > 0.0) || !std::isfinite(en.weight_max)) throw ConfigError("weights must be positive");
    }
    if (j.contains("p")) {
      std::tie(en.p_min, en.p_max) = range_of(j.at("p"), "p");
      if (!(en.p_min >= 1.0) || !std::isfinite(en.p_max)) throw ConfigError("p must lie in [1, inf)");
    }
    if (j.contains("nonconvex")) {
      if (!j.at("nonconvex").is_boolean()) throw ConfigError("nonconvex: expected a boolean");
      en.nonconvex = j.at("nonconvex").get<bool>();
    }
    if (j.contains("edges")) {
      if (!j.at("edges").is_string()) throw ConfigError("edges: expected a string such as \"power2\"");
      spec.path_edge = parse_path_edge(j.at("edges").get<std::string>());
      if (!j.contains("weights")) en.weight_min = en.weight_max = 1.0;
    }
  }
  static const std::vector<std::string> families = {"random", "two_node_quadratic", "two_node_indicator",
                                                    "negative_control"};
  if (std::find(families.begin(), families.end(), spec.family) == families.end()) {
    throw ConfigError("unknown instance family: " + spec.family);
  }
  return spec;
}

Instance generate_instance(const InstanceSpec& spec, std::uint64_t seed) {
  if (spec.family == "two_node_quadratic") return two_node("two_node_quadratic", {1.0, 1.0}, EdgeFunction::power(2.0));
  if (spec.family == "two_node_indicator") {
    return two_node("two_node_indicator", {1.0, 3.0}, EdgeFunction::interval_indicator(0.0));
  }
  if (spec.family == "negative_control") return two_node("negative_control", {1.0, 1.0}, EdgeFunction::truncated_abs(1.0));
  if (spec.family != "random") throw ConfigError("unknown instance family: " + spec.family);

  const auto& en = spec.energy;
  if (en.nodes < 1) throw ConfigError("nodes must be positive");
  Rng rng = Rng::stream(seed, "instance", 0);
  try {
    SpacePtr space = random_space(rng, en);
    std::ostringstream name;
    if (spec.path_edge) {
      std::vector<Edge> edges;
      for (std::size_t i = 0; i + 1 < en.nodes; ++i) edges.push_back({i, i + 1, *spec.path_edge});
      const bool convex = spec.path_edge->is_convex();
      name << "path" << en.nodes << ":" << spec.path_edge->describe();
      auto e = convex ? make_mixed_energy(space, std::move(edges)) : make_negative_control_energy(space, std::move(edges));
      if (en.nodes == 2 && spec.path_edge->kind() == EdgeFunction::Kind::power &&
          spec.path_edge->parameter() == 2.0 && space->weight(0) == 1.0 && space->weight(1) == 1.0) {
        return {"two_node_quadratic", std::move(e), false};
      }
      return {name.str(), std::move(e), !convex};
    }
    auto e = random_mixed_energy(rng, space, en);
    name << (en.nonconvex ? "nonconvex" : "random") << en.nodes << "@" << seed;
    return {name.str(), std::move(e), en.nonconvex};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid instance spec: ") + e.what());
  }
}

Json instance_to_json(const Instance& inst) {
  return {{"schema_version", Report::kSchemaVersion},
          {"name", inst.name},
          {"negative_control", inst.negative_control},
          {"space", to_json(*inst.energy.space())},
          {"energy", to_json(inst.energy)}};
}

Instance instance_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("space") || !j.contains("energy")) {
    throw ConfigError("instance file needs 'space' and 'energy'");
  }
  auto space = space_from_json(j.at("space"));
  auto e = energy_from_json(space, j.at("energy"));
  Instance inst{j.value("name", std::string("instance")), e, !e.is_convex()};
  if (j.contains("negative_control")) {
    if (!j.at("negative_control").is_boolean()) throw ConfigError("negative_control: expected a boolean");
    inst.negative_control = j.at("negative_control").get<bool>();
  }
  return inst;
}

Instance load_instance(const std::string& source, std::uint64_t seed) {
  const std::string s = trim(source);
  if (s.empty()) throw ConfigError("empty instance source");
  if (s.front() == '{') {
    Json j;
    try {
      j = Json::parse(s);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("instance spec: ") + e.what());
    }
    return generate_instance(parse_instance_spec(j), seed);
  }
  std::error_code ec;
  if (std::filesystem::is_regular_file(s, ec)) {
    std::ifstream in(s);
    if (!in) throw ConfigError("cannot read instance file: " + s);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw ConfigError("instance file " + s + ": " + e.what());
    }
    Instance inst = j.contains("energy") ? instance_from_json(j) : generate_instance(parse_instance_spec(j), seed);
    return inst;
  }
  if (s.find('/') != std::string::npos || s.ends_with(".json")) throw ConfigError("no such instance file: " + s);
  return generate_instance(parse_instance_spec(Json(s)), seed);
}

std::size_t SuiteResult::violations() const {
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (!r.instance.negative_control) n += r.report.violations();
  }
  return n;
}

std::size_t SuiteResult::expected_violations() const {
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.instance.negative_control) n += r.report.violations();
  }
  return n;
}

const std::vector<std::string>& suite_check_names() {
  static const std::vector<std::string> names = [] {
    auto out = check_names();
    out.emplace_back(kResolventCheck);
    std::sort(out.begin(), out.end());
    return out;
  }();
  return names;
}

const std::vector<std::string>& canonical_instances() {
  static const std::vector<std::string> names = {"two_node_quadratic", "two_node_indicator", "random"};
  return names;
}

Witness sample_suite_witness(std::string_view check, const EnergyFunctional& e, const SweepConfig& cfg,
                             std::size_t index) {
  if (check != kResolventCheck) return sample_witness(check, e, cfg, index);
  Rng rng = Rng::stream(cfg.seed, check, index);
  Witness w;
  w.x = rng.log_uniform(1e-2, 1e1);
  w.alpha = rng.log_uniform(1e-2, 1e1);
  ValueDistribution bulk = cfg.dist;
  bulk.heavy_rate = 0.0;
  const Fn u = random_fn(rng, e.space(), bulk);
  w.f.assign(u.values().begin(), u.values().end());
  if (rng.bernoulli(0.5)) {
    for (double x : w.f) w.g.push_back(x - rng.uniform(0.0, w.alpha));
  } else {
    const Fn v = random_fn(rng, e.space(), bulk);
    w.g.assign(v.values().begin(), v.values().end());
  }
  return w;
}

std::vector<NamedResidual> evaluate_suite_check(std::string_view check, const EnergyFunctional& e, const Witness& w,
                                                const Tolerance& tol, const SolverConfig& solver) {
  if (check != kResolventCheck) return evaluate_check(check, e, w, tol);
  const Fn u(e.space(), w.f);
  const Fn v(e.space(), w.g);
  const double lambda = w.x;
  const auto ju = resolvent(e, lambda, u, solver);
  const auto jv = resolvent(e, lambda, v, solver);
  std::vector<NamedResidual> out;
  for (auto kind : {ResolventProperty::nonexpansive, ResolventProperty::order_preserving,
                    ResolventProperty::linfty_band, ResolventProperty::invariance_0_alpha}) {
    out.push_back({"resolvent/" + std::string(property_name(kind)),
                   resolvent_property_residual(kind, lambda, u, v, w.alpha, ju, jv, tol)});
  }
  return out;
}

SuiteResult run_suite(const SuiteConfig& cfg) {
  if (cfg.format != "json" && cfg.format != "csv") throw ConfigError("format must be json or csv");
  if (!(cfg.tol.atol >= 0.0) || !(cfg.tol.rtol >= 0.0)) throw ConfigError("tolerances must be nonnegative");
  const auto& sources = cfg.instances.empty() ? canonical_instances() : cfg.instances;

  std::vector<Instance> instances;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    instances.push_back(load_instance(sources[i], Rng::stream(cfg.seed, "instance", i).next_u64()));
  }
  std::vector<std::vector<std::string>> enabled;
  for (const auto& inst : instances) enabled.push_back(applicable_checks(cfg, inst));

  SuiteResult result;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    SweepConfig sweep;
    sweep.seed = cfg.seed;
    sweep.n_samples = cfg.n_samples;
    sweep.tol = cfg.tol;
    Report report;
    report.seed = cfg.seed;
    report.tol = cfg.tol;
    report.instance = instances[i].name;
    report.n_samples = cfg.n_samples;
    for (const auto& check : enabled[i]) {
      for (std::size_t k = 0; k < cfg.n_samples; ++k) {
        const Witness w = sample_suite_witness(check, instances[i].energy, sweep, k);
        accumulate(report, check, k, w, evaluate_suite_check(check, instances[i].energy, w, cfg.tol, cfg.solver));
      }
    }
    result.runs.push_back({std::move(instances[i]), std::move(report)});
  }
  result.exit_code = result.violations() > 0           ? kExitViolations
                     : result.expected_violations() > 0 ? kExitExpectedViolation
                                                        : kExitPass;
  if (!cfg.out.empty()) {
    std::ofstream os(cfg.out);
    if (!os) throw ConfigError("cannot write " + cfg.out);
    if (cfg.format == "json") {
      os << suite_to_json(cfg, result).dump(2) << '\n';
    } else {
      os << suite_to_csv(result);
    }
    if (!os) throw ConfigError("write failed: " + cfg.out);
  }
  return result;
}

Json suite_to_json(const SuiteConfig& cfg, const SuiteResult& result) {
  Json runs = Json::array();
  for (const auto& run : result.runs) {
    runs.push_back({{"instance", instance_to_json(run.instance)}, {"report", to_json(run.report)}});
  }
  Json checks = Json::array();
  for (const auto& c : cfg.checks) checks.push_back(c);
  return {{"schema_version", Report::kSchemaVersion},
          {"config",
           {{"seed", cfg.seed},
            {"n_samples", cfg.n_samples},
            {"tolerance", tolerance_json(cfg.tol)},
            {"checks", std::move(checks)},
            {"solver",
             {{"tolerance", number_to_json(cfg.solver.tolerance)},
              {"max_iterations", cfg.solver.max_iterations},
              {"strategy", strategy_name(cfg.solver.strategy)}}}}},
          {"violations", result.violations()},
          {"expected_violations", result.expected_violations()},
          {"exit_code", result.exit_code},
          {"runs", std::move(runs)}};
}

std::string suite_to_csv(const SuiteResult& result) {
  std::string out;
  bool header = true;
  for (const auto& run : result.runs) {
    out += report_csv(run.report, header);
    header = false;
  }
  if (header) out = report_csv(Report{}, true);
  return out;
}

std::vector<IdentityResult> identity_suite(std::uint64_t seed, std::size_t n_random, std::size_t grid_points) {
  IdentityInputs in;
  for (std::size_t i = 0; i < grid_points; ++i) {
    in.grid.push_back(grid_points == 1 ? 0.0 : -10.0 + 20.0 * static_cast<double>(i) / static_cast<double>(grid_points - 1));
  }
  auto space = FiniteMeasureSpace::counting(16);
  for (std::size_t i = 0; i < n_random; ++i) {
    Rng rng = Rng::stream(seed, "identities", i);
    Fn u = uniform_fn(rng, space, -10.0, 10.0);
    Fn v = uniform_fn(rng, space, -10.0, 10.0);
    in.pairs.emplace_back(std::move(u), std::move(v));
  }
  std::vector<IdentityResult> out;
  for (auto kind : all_identity_kinds()) {
    double dev = 0.0;
    for (int k = 0; k < 3; ++k) {
      IdentityInputs run = in;
      run.alpha = std::array{0.25, 1.0, 3.0}[k];
      run.x = std::array{0.0, 0.5, 2.0}[k];
      if (kind == IdentityKind::case3_ids) {
        run.x1 = std::array{-0.5, -2.0, -1.0}[k];
        run.x2 = std::array{2.0, 0.5, 1.0}[k];
      } else {
        run.x1 = std::array{0.0, 0.5, 1.0}[k];
        run.x2 = std::array{1.0, 2.0, 4.0}[k];
      }
      dev = std::max(dev, identity_check(kind, run));
    }
    out.push_back({kind, dev});
  }
  return out;
}

double replay_worst_cases(const Json& suite) {
  try {
    const auto& config = suite.at("config");
    SolverConfig solver;
    solver.tolerance = number_from_json(config.at("solver").at("tolerance"));
    solver.max_iterations = config.at("solver").at("max_iterations").get<int>();
    solver.strategy = strategy_from_name(config.at("solver").at("strategy").get<std::string>());
    double worst = 0.0;
    for (const auto& run : suite.at("runs")) {
      const Instance inst = instance_from_json(run.at("instance"));
      const Report report = report_from_json(run.at("report"));
      for (const auto& summary : report.checks) {
        if (!summary.worst) continue;
        const auto residuals = evaluate_suite_check(summary.check, inst.energy, *summary.worst, report.tol, solver);
        const auto it = std::find_if(residuals.begin(), residuals.end(),
                                     [&](const NamedResidual& r) { return r.name == summary.name; });
        if (it == residuals.end()) throw ConfigError("replay: no residual named " + summary.name);
        const double a = it->residual.slack;
        const double b = summary.worst_residual->slack;
        const double d = a == b ? 0.0 : std::abs(a - b);
        worst = std::max(worst, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
      }
    }
    return worst;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("replay: ") + e.what());
  }
}

}  // namespace ndf
