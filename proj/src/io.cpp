#include "ndf/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ndf/error.hpp"

namespace ndf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field: ") + key);
  return j.at(key);
}

std::vector<double> numbers(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(number_from_json(x));
  return out;
}

Json numbers_to_json(std::span<const double> xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(number_to_json(x));
  return out;
}

template <class T>
T integer(const Json& j) {
  if (!j.is_number_integer()) throw ConfigError("expected an integer");
  if (j.is_number_unsigned()) return static_cast<T>(j.get<std::uint64_t>());
  const auto v = j.get<std::int64_t>();
  if (v < 0) throw ConfigError("expected a nonnegative integer");
  return static_cast<T>(v);
}

std::string text(const Json& j) {
  if (!j.is_string()) throw ConfigError("expected a string");
  return j.get<std::string>();
}

Status status_from_name(std::string_view name) {
  for (Status s : {Status::satisfied, Status::violated, Status::vacuous}) {
    if (status_name(s) == name) return s;
  }
  throw ConfigError("unknown status: " + std::string(name));
}

// Library errors raised while rebuilding objects surface as config errors.
template <class F>
auto rethrow_as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Json number_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (x == kInf) return "inf";
  if (x == -kInf) return "-inf";
  return x;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError("expected a number, got " + j.dump());
}

std::string_view edge_kind_name(EdgeFunction::Kind kind) {
  using K = EdgeFunction::Kind;
  switch (kind) {
    case K::power: return "power";
    case K::huber: return "huber";
    case K::interval_indicator: return "interval_indicator";
    case K::quadratic_weighted: return "quadratic_weighted";
    case K::pwl_convex: return "pwl_convex";
    case K::truncated_abs: return "truncated_abs";
    case K::shifted: return "shifted";
  }
  return "?";
}

EdgeFunction::Kind edge_kind_from_name(std::string_view name) {
  using K = EdgeFunction::Kind;
  for (K k : {K::power, K::huber, K::interval_indicator, K::quadratic_weighted, K::pwl_convex, K::truncated_abs,
              K::shifted}) {
    if (edge_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown edge kind: " + std::string(name));
}

Json to_json(const PiecewiseLinear& c) {
  return {{"breakpoints", numbers_to_json(c.breakpoints())},
          {"slopes", numbers_to_json(c.slopes())},
          {"knots", numbers_to_json(c.knot_values())},
          {"anchor", number_to_json(c.anchor())}};
}

PiecewiseLinear pwl_from_json(const Json& j) {
  auto bps = numbers(field(j, "breakpoints"));
  auto slopes = numbers(field(j, "slopes"));
  const double anchor = number_from_json(field(j, "anchor"));
  if (slopes.size() != bps.size() + 1) throw ConfigError("pwl: need one more slope than breakpoints");
  if (!std::is_sorted(bps.begin(), bps.end())) throw ConfigError("pwl: breakpoints must be sorted");
  for (double x : bps) {
    if (!std::isfinite(x)) throw ConfigError("pwl: non-finite breakpoint");
  }
  if (!j.contains("knots")) {
    return rethrow_as_config([&] { return PiecewiseLinear::from_slopes(bps, slopes, anchor); });
  }
  auto knots = numbers(j.at("knots"));
  if (knots.size() != bps.size()) throw ConfigError("pwl: one knot value per breakpoint");
  return PiecewiseLinear::from_knots(std::move(bps), std::move(slopes), std::move(knots), anchor);
}

Json to_json(const EdgeFunction& b) {
  using K = EdgeFunction::Kind;
  Json out{{"kind", edge_kind_name(b.kind())}};
  switch (b.kind()) {
    case K::pwl_convex:
      out["pwl"] = to_json(b.pwl());
      break;
    case K::shifted:
      out["base"] = to_json(b.base());
      out["offset"] = number_to_json(b.parameter());
      break;
    default:
      out["parameter"] = number_to_json(b.parameter());
  }
  return out;
}

EdgeFunction edge_from_json(const Json& j) {
  using K = EdgeFunction::Kind;
  const K kind = edge_kind_from_name(text(field(j, "kind")));
  return rethrow_as_config([&] {
    switch (kind) {
      case K::power: return EdgeFunction::power(number_from_json(field(j, "parameter")));
      case K::huber: return EdgeFunction::huber(number_from_json(field(j, "parameter")));
      case K::interval_indicator: return EdgeFunction::interval_indicator(number_from_json(field(j, "parameter")));
      case K::quadratic_weighted: return EdgeFunction::quadratic_weighted(number_from_json(field(j, "parameter")));
      case K::truncated_abs: return EdgeFunction::truncated_abs(number_from_json(field(j, "parameter")));
      case K::pwl_convex: return EdgeFunction::pwl_convex(pwl_from_json(field(j, "pwl")));
      case K::shifted:
        return edge_from_json(field(j, "base")).shifted(number_from_json(field(j, "offset")));
    }
    throw ConfigError("unknown edge kind");
  });
}

Json to_json(const FiniteMeasureSpace& s) {
  return {{"ids", s.point_ids()}, {"weights", numbers_to_json(s.weights())}};
}

SpacePtr space_from_json(const Json& j) {
  auto weights = numbers(field(j, "weights"));
  std::vector<std::string> ids;
  if (j.contains("ids")) {
    for (const auto& id : j.at("ids")) ids.push_back(text(id));
  } else {
    for (std::size_t i = 0; i < weights.size(); ++i) ids.push_back(std::to_string(i));
  }
  return rethrow_as_config([&] { return FiniteMeasureSpace::make(std::move(ids), std::move(weights)); });
}

Json to_json(const Fn& f) { return numbers_to_json(f.values()); }

Fn fn_from_json(const SpacePtr& space, const Json& j) {
  auto values = numbers(j.is_object() ? field(j, "values") : j);
  if (values.size() != space->size()) {
    throw ConfigError("function has " + std::to_string(values.size()) + " values, space has " +
                      std::to_string(space->size()) + " points");
  }
  return Fn(space, std::move(values));
}

Json to_json(const EnergyFunctional& e) {
  using K = EnergyFunctional::Kind;
  switch (e.kind()) {
    case K::zero:
      return {{"kind", "zero"}};
    case K::quadratic: {
      Json rows = Json::array();
      const auto& a = e.matrix();
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back(number_to_json(a(i, k)));
        rows.push_back(std::move(row));
      }
      return {{"kind", "quadratic"}, {"matrix", std::move(rows)}};
    }
    case K::mixed: {
      Json edges = Json::array();
      for (const auto& edge : e.edges()) edges.push_back({{"from", edge.from}, {"to", edge.to}, {"b", to_json(edge.b)}});
      return {{"kind", "mixed"}, {"edges", std::move(edges)}};
    }
    case K::fshift:
      return {{"kind", "fshift"}, {"base", to_json(e.base())}, {"center", to_json(e.center())}};
  }
  return {};
}

EnergyFunctional energy_from_json(const SpacePtr& space, const Json& j) {
  const std::string kind = text(field(j, "kind"));
  return rethrow_as_config([&]() -> EnergyFunctional {
    if (kind == "zero") return make_zero_energy(space);
    if (kind == "quadratic") {
      const auto& rows = field(j, "matrix");
      const auto n = static_cast<Eigen::Index>(space->size());
      if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) throw ConfigError("matrix: wrong size");
      Eigen::MatrixXd a(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = numbers(rows[static_cast<std::size_t>(i)]);
        if (static_cast<Eigen::Index>(row.size()) != n) throw ConfigError("matrix: wrong size");
        for (Eigen::Index k = 0; k < n; ++k) a(i, k) = row[static_cast<std::size_t>(k)];
      }
      return make_quadratic_form(space, std::move(a));
    }
    if (kind == "mixed") {
      std::vector<Edge> edges;
      bool convex = true;
      for (const auto& ej : field(j, "edges")) {
        Edge edge{integer<std::size_t>(field(ej, "from")), integer<std::size_t>(field(ej, "to")),
                  edge_from_json(field(ej, "b"))};
        convex = convex && edge.b.is_convex();
        edges.push_back(std::move(edge));
      }
      return convex ? make_mixed_energy(space, std::move(edges))
                    : make_negative_control_energy(space, std::move(edges));
    }
    if (kind == "fshift") {
      return f_shift(energy_from_json(space, field(j, "base")), fn_from_json(space, field(j, "center")));
    }
    throw ConfigError("unknown functional kind: " + kind);
  });
}

Json to_json(const Witness& w) {
  Json maps = Json::array();
  for (const auto& c : w.maps) maps.push_back(to_json(c));
  return {{"f", numbers_to_json(w.f)},
          {"g", numbers_to_json(w.g)},
          {"maps", std::move(maps)},
          {"map_kind", w.map_kind},
          {"alpha", number_to_json(w.alpha)},
          {"x", number_to_json(w.x)},
          {"x1", number_to_json(w.x1)},
          {"x2", number_to_json(w.x2)},
          {"n", w.n}};
}

Witness witness_from_json(const Json& j) {
  Witness w;
  w.f = numbers(field(j, "f"));
  w.g = numbers(field(j, "g"));
  for (const auto& c : field(j, "maps")) w.maps.push_back(pwl_from_json(c));
  w.map_kind = text(field(j, "map_kind"));
  w.alpha = number_from_json(field(j, "alpha"));
  w.x = number_from_json(field(j, "x"));
  w.x1 = number_from_json(field(j, "x1"));
  w.x2 = number_from_json(field(j, "x2"));
  w.n = integer<unsigned>(field(j, "n"));
  return w;
}

Json to_json(const Residual& r) {
  return {{"lhs", number_to_json(r.lhs.value())},
          {"rhs", number_to_json(r.rhs.value())},
          {"slack", number_to_json(r.slack)},
          {"status", status_name(r.status)}};
}

Residual residual_from_json(const Json& j) {
  Residual r;
  r.lhs = rethrow_as_config([&] { return ExtReal(number_from_json(field(j, "lhs"))); });
  r.rhs = rethrow_as_config([&] { return ExtReal(number_from_json(field(j, "rhs"))); });
  r.slack = number_from_json(field(j, "slack"));
  r.status = status_from_name(text(field(j, "status")));
  return r;
}

Json to_json(const Report& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json cj{{"name", c.name},
            {"check", c.check},
            {"n", c.n},
            {"violations", c.violations},
            {"vacuous", c.vacuous},
            {"min_slack", number_to_json(c.min_slack)}};
    if (c.worst_index) {
      cj["worst_index"] = *c.worst_index;
      cj["worst_witness"] = to_json(*c.worst);
      cj["worst_residual"] = to_json(*c.worst_residual);
    }
    checks.push_back(std::move(cj));
  }
  return {{"schema_version", Report::kSchemaVersion},
          {"seed", r.seed},
          {"tolerance", {{"atol", number_to_json(r.tol.atol)}, {"rtol", number_to_json(r.tol.rtol)}}},
          {"instance", r.instance},
          {"n_samples", r.n_samples},
          {"violations", r.violations()},
          {"vacuous", r.vacuous()},
          {"checks", std::move(checks)}};
}

Report report_from_json(const Json& j) {
  const auto version = integer<int>(field(j, "schema_version"));
  if (version != Report::kSchemaVersion) {
    throw ConfigError("unsupported report schema version " + std::to_string(version));
  }
  Report r;
  r.seed = integer<std::uint64_t>(field(j, "seed"));
  r.tol.atol = number_from_json(field(field(j, "tolerance"), "atol"));
  r.tol.rtol = number_from_json(field(field(j, "tolerance"), "rtol"));
  r.instance = text(field(j, "instance"));
  r.n_samples = integer<std::size_t>(field(j, "n_samples"));
  for (const auto& cj : field(j, "checks")) {
    CheckSummary c;
    c.name = text(field(cj, "name"));
    c.check = text(field(cj, "check"));
    c.n = integer<std::size_t>(field(cj, "n"));
    c.violations = integer<std::size_t>(field(cj, "violations"));
    c.vacuous = integer<std::size_t>(field(cj, "vacuous"));
    c.min_slack = number_from_json(field(cj, "min_slack"));
    if (cj.contains("worst_index")) {
      c.worst_index = integer<std::size_t>(cj.at("worst_index"));
      c.worst = witness_from_json(field(cj, "worst_witness"));
      c.worst_residual = residual_from_json(field(cj, "worst_residual"));
    }
    r.checks.push_back(std::move(c));
  }
  return r;
}

std::string report_csv(const Report& r, bool header) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (header) os << "instance,name,check,n,violations,vacuous,min_slack,worst_index\n";
  for (const auto& c : r.checks) {
    os << r.instance << ',' << c.name << ',' << c.check << ',' << c.n << ',' << c.violations << ',' << c.vacuous
       << ',' << c.min_slack << ',';
    if (c.worst_index) os << *c.worst_index;
    os << '\n';
  }
  return os.str();
}

}  // namespace ndf
