#include "convflow/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace convflow {

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

namespace {

double number(const Json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + ": expected a number");
  return value.get<double>();
}

const Json& required(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

}  // namespace

Vector vector_from_json(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number(value[i], where);
  return v;
}

Matrix matrix_from_json(const Json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) throw ConfigError(where + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(value.size());
  if (!value[0].is_array()) throw ConfigError(where + ": rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(value[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector row = vector_from_json(value[static_cast<std::size_t>(i)], where);
    if (row.size() != cols) throw ConfigError(where + ": ragged matrix rows");
    m.row(i) = row.transpose();
  }
  return m;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ProblemOracle problem_from_json(const Json& spec) {
  const std::string where = "problem";
  if (!spec.is_object()) throw ConfigError(where + ": expected an object");
  const Json& kind_json = required(spec, "kind", where);
  if (!kind_json.is_string()) throw ConfigError(where + ": kind must be a string");
  const auto kind = kind_json.get<std::string>();
  try {
    if (kind == "quadratic") {
      reject_unknown_keys(spec, {"kind", "eigs", "b"}, where);
      return make_quadratic(vector_from_json(required(spec, "eigs", where), where + ".eigs"),
                            vector_from_json(required(spec, "b", where), where + ".b"));
    }
    if (kind == "lasso") {
      if (spec.contains("generate")) {
        reject_unknown_keys(spec, {"kind", "generate"}, where);
        const Json& g = spec.at("generate");
        reject_unknown_keys(g, {"rows", "cols", "seed", "rho_fraction"}, where + ".generate");
        const auto rows = static_cast<Eigen::Index>(number(required(g, "rows", where), where + ".rows"));
        const auto cols = static_cast<Eigen::Index>(number(required(g, "cols", where), where + ".cols"));
        const auto seed = g.contains("seed") ? g.at("seed").get<std::uint64_t>() : 0;
        const double frac = g.contains("rho_fraction") ? number(g.at("rho_fraction"), where) : 0.1;
        return make_random_lasso(rows, cols, seed, frac);
      }
      reject_unknown_keys(spec, {"kind", "a", "b", "rho"}, where);
      return make_lasso(matrix_from_json(required(spec, "a", where), where + ".a"),
                        vector_from_json(required(spec, "b", where), where + ".b"),
                        number(required(spec, "rho", where), where + ".rho"));
    }
    if (kind == "logcosh") {
      reject_unknown_keys(spec, {"kind", "scale", "x0"}, where);
      const double scale = spec.contains("scale") ? number(spec.at("scale"), where + ".scale") : 1.0;
      return make_logcosh(scale, vector_from_json(required(spec, "x0", where), where + ".x0"));
    }
  } catch (const InvalidProblem& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  return fmt::format("{:.17g}", value);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "k,f_gap,lyapunov,bound,slack,grad_norm,alpha,gamma\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.f_gap) << ',' << format_double(r.lyapunov) << ','
        << format_double(r.bound) << ',' << format_double(r.slack) << ',' << format_double(r.grad_norm) << ','
        << format_double(r.alpha) << ',' << format_double(r.gamma) << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const ContinuousDecayReport& report) {
  out << "t,lyapunov,bound,x_norm_err,gamma\n";
  for (const auto& r : report.rows) {
    out << format_double(r.t) << ',' << format_double(r.lyapunov) << ',' << format_double(r.bound) << ','
        << format_double(r.x_norm_err) << ',' << format_double(r.gamma) << '\n';
  }
}

void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rows) {
  out << "k,rho_measured,rho_bound,slack\n";
  for (const auto& r : rows) {
    out << r.k << ',' << format_double(r.rho_measured) << ',' << format_double(r.rho_bound) << ','
        << format_double(r.slack) << '\n';
  }
}

namespace {

Json finite_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

}  // namespace

Json to_json(const FlowState& state) {
  Json out{{"t", state.t}, {"x", to_json(state.x)}};
  if (state.v) out["v"] = to_json(*state.v);
  if (state.gamma) out["gamma"] = *state.gamma;
  return out;
}

Json to_json(const BoundsReport& report) {
  Json items = Json::array();
  for (const auto& r : report.inequalities) {
    items.push_back({{"name", r.name},
                     {"skipped", r.skipped},
                     {"checked", r.checked},
                     {"violations", r.violations},
                     {"worst_slack", finite_or_null(r.worst_slack)},
                     {"worst_scaled_slack", finite_or_null(r.worst_scaled_slack)},
                     {"worst_x", to_json(r.worst_x)},
                     {"worst_y", to_json(r.worst_y)}});
  }
  return {{"check", report.check},     {"problem", report.problem},
          {"samples", report.samples}, {"seed", report.seed},
          {"inequalities", items},     {"status", report.passed() ? "PASS" : "FAIL"}};
}

Json to_json(const StrongConditionReport& report) {
  Json out{{"pairing", report.pairing},
           {"samples", report.samples},
           {"accepted", report.accepted},
           {"attempts", report.attempts},
           {"seed", report.seed},
           {"min_slack", finite_or_null(report.min_slack)},
           {"min_scaled_slack", finite_or_null(report.min_scaled_slack)},
           {"argmin", to_json(report.argmin)},
           {"status", report.passed ? "PASS" : "FAIL"}};
  if (report.c_override) out["c_override"] = *report.c_override;
  return out;
}

Json to_json(const DecayOracleReport& report) {
  return {{"case", report.which},
          {"k_max", report.k_max},
          {"sequences", report.sequences},
          {"violations", report.violations},
          {"worst_ratio", report.worst_ratio},
          {"max_p_sum", finite_or_null(report.max_p_sum)},
          {"status", report.passed ? "PASS" : "FAIL"}};
}

Json to_json(const ContinuousDecayReport& report) {
  Json out{{"flow", std::string(to_string(report.flow))},
           {"lyapunov", std::string(to_string(report.lyapunov))},
           {"t0", report.t0},
           {"t_end", report.t_end},
           {"dt", report.dt},
           {"tol", report.tol},
           {"steps", report.rows.empty() ? 0 : report.rows.size() - 1},
           {"worst_ratio", report.worst_ratio},
           {"status", report.passed ? "PASS" : "FAIL"}};
  out["first_violation_t"] = report.first_violation_t ? Json(*report.first_violation_t) : Json(nullptr);
  return out;
}

}  // namespace convflow
