#pragma once

#include <json.hpp>
#include <string>
#include <string_view>

#include "ndf/criteria.hpp"
#include "ndf/edge_function.hpp"
#include "ndf/functional.hpp"
#include "ndf/measure_space.hpp"
#include "ndf/piecewise_linear.hpp"

namespace ndf {

using Json = nlohmann::json;

// Non-finite doubles are written as the strings "inf", "-inf" and "nan".
Json number_to_json(double x);
double number_from_json(const Json& j);

std::string_view edge_kind_name(EdgeFunction::Kind kind);
EdgeFunction::Kind edge_kind_from_name(std::string_view name);

// Every from_json throws ConfigError on malformed input.

Json to_json(const PiecewiseLinear& c);
PiecewiseLinear pwl_from_json(const Json& j);

Json to_json(const EdgeFunction& b);
EdgeFunction edge_from_json(const Json& j);

Json to_json(const FiniteMeasureSpace& s);
SpacePtr space_from_json(const Json& j);

Json to_json(const Fn& f);
Fn fn_from_json(const SpacePtr& space, const Json& j);

Json to_json(const EnergyFunctional& e);
EnergyFunctional energy_from_json(const SpacePtr& space, const Json& j);

Json to_json(const Witness& w);
Witness witness_from_json(const Json& j);

Json to_json(const Residual& r);
Residual residual_from_json(const Json& j);

Json to_json(const Report& r);
Report report_from_json(const Json& j);

// One row per check summary, header first.
std::string report_csv(const Report& r, bool header = true);

}  // namespace ndf
