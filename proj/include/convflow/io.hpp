#pragma once

#include "convflow/calculus.hpp"
#include "convflow/flows.hpp"
#include "convflow/lyapunov.hpp"
#include "convflow/problems.hpp"
#include "convflow/schedules.hpp"
#include "convflow/solvers.hpp"
#include "convflow/strong_condition.hpp"

#include <json.hpp>

#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace convflow {

using Json = nlohmann::json;

// Throws ConfigError naming the first key of `obj` outside `allowed`.
void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where);

Vector vector_from_json(const Json& value, const std::string& where);
Matrix matrix_from_json(const Json& value, const std::string& where);  // row-major nested arrays
Json to_json(const Vector& v);

// {"kind": "quadratic", "eigs": [...], "b": [...]}
// {"kind": "lasso", "a": [[...], ...], "b": [...], "rho": r}
// {"kind": "lasso", "generate": {"rows": m, "cols": n, "seed": s, "rho_fraction": f}}
// {"kind": "logcosh", "scale": s, "x0": [...]}
ProblemOracle problem_from_json(const Json& spec);

// Doubles with 17 significant digits; NaN as "nan".
std::string format_double(double value);

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trajectory_csv(std::ostream& out, const ContinuousDecayReport& report);
void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rows);

Json to_json(const FlowState& state);
Json to_json(const BoundsReport& report);
Json to_json(const StrongConditionReport& report);
Json to_json(const DecayOracleReport& report);
Json to_json(const ContinuousDecayReport& report);

}  // namespace convflow
