#include "convflow/harness.hpp"

#include "convflow/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

namespace convflow {

namespace {

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  file << text;
}

double positive_number(const Json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + ": expected a number");
  const double x = value.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(where + ": must be positive and finite");
  return x;
}

}  // namespace

ExperimentConfig config_from_json(const Json& spec) {
  reject_unknown_keys(spec,
                      {"problem", "solver", "iters", "x0", "v0", "gamma0", "output", "seed", "stop_tol"},
                      "config");
  ExperimentConfig cfg;
  try {
    if (!spec.contains("problem")) throw ConfigError("config: missing key 'problem'");
    cfg.problem = spec.at("problem");
    if (!spec.contains("solver")) throw ConfigError("config: missing key 'solver'");
    const Json& solver = spec.at("solver");
    if (solver.is_string()) {
      cfg.solver = parse_solver_kind(solver.get<std::string>());
    } else {
      reject_unknown_keys(solver, {"kind", "alpha", "variant"}, "config.solver");
      if (!solver.contains("kind") || !solver.at("kind").is_string())
        throw ConfigError("config.solver: missing string key 'kind'");
      cfg.solver = parse_solver_kind(solver.at("kind").get<std::string>());
      if (solver.contains("alpha")) {
        const Json& a = solver.at("alpha");
        if (a.is_string()) {
          const auto expr = a.get<std::string>();
          if (expr != "1/L" && expr != "2/(L+mu)")
            throw ConfigError("config.solver.alpha: expected a number, \"1/L\" or \"2/(L+mu)\"");
          cfg.alpha = expr;
        } else {
          cfg.alpha = positive_number(a, "config.solver.alpha");
        }
      }
      if (solver.contains("variant")) {
        const auto v = solver.at("variant").get<std::string>();
        if (v == "sqrt") cfg.variant = MomentumVariant::sqrt;
        else if (v == "root") cfg.variant = MomentumVariant::root;
        else throw ConfigError("config.solver.variant: expected \"sqrt\" or \"root\"");
      }
    }
    if (spec.contains("iters")) {
      const Json& it = spec.at("iters");
      if (!it.is_number_unsigned()) throw ConfigError("config.iters: expected a nonnegative integer");
      cfg.iters = it.get<std::size_t>();
    }
    if (spec.contains("x0")) {
      cfg.x0 = spec.at("x0");
      if (!(cfg.x0.is_array() || (cfg.x0.is_string() && cfg.x0.get<std::string>() == "random")))
        throw ConfigError("config.x0: expected an array or \"random\"");
    }
    if (spec.contains("v0")) cfg.v0 = vector_from_json(spec.at("v0"), "config.v0");
    if (spec.contains("gamma0")) cfg.gamma0 = positive_number(spec.at("gamma0"), "config.gamma0");
    if (spec.contains("output")) cfg.output = spec.at("output").get<std::string>();
    if (spec.contains("seed")) {
      if (!spec.at("seed").is_number_unsigned()) throw ConfigError("config.seed: expected a nonnegative integer");
      cfg.seed = spec.at("seed").get<std::uint64_t>();
    }
    if (spec.contains("stop_tol")) cfg.stop_tol = positive_number(spec.at("stop_tol"), "config.stop_tol");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::vector<ExperimentConfig> configs_from_json(const Json& spec) {
  std::vector<ExperimentConfig> out;
  if (spec.is_array()) {
    if (spec.empty()) throw ConfigError("batch: no configs");
    for (const auto& item : spec) out.push_back(config_from_json(item));
  } else {
    out.push_back(config_from_json(spec));
  }
  return out;
}

Experiment prepare(const ExperimentConfig& config) {
  Experiment ex;
  ex.oracle = problem_from_json(config.problem);
  const auto& oracle = ex.oracle;
  RunConfig& run = ex.run;
  run.solver.kind = config.solver;
  run.solver.momentum = config.variant;
  if (config.alpha) {
    if (const auto* value = std::get_if<double>(&*config.alpha)) {
      run.solver.alpha = *value;
    } else {
      const auto& expr = std::get<std::string>(*config.alpha);
      run.solver.alpha = expr == "1/L" ? 1.0 / oracle.lip : 2.0 / (oracle.lip + oracle.mu);
    }
  }
  if (config.x0.is_array()) {
    run.x0 = vector_from_json(config.x0, "config.x0");
  } else if (config.x0.is_string()) {
    CounterRng rng(config.seed, 404);
    run.x0 = rng.uniform_box(oracle.x_star, 10.0);
  } else {
    run.x0 = oracle.x0;
  }
  if (run.x0.size() != oracle.dim) throw ConfigError("config.x0: dimension does not match the problem");
  if (config.v0 && config.v0->size() != oracle.dim)
    throw ConfigError("config.v0: dimension does not match the problem");
  run.v0 = config.v0;
  run.gamma0 = config.gamma0;
  run.iters = config.iters;
  run.stop_tol = config.stop_tol;
  check_compatible(oracle, run.solver);
  return ex;
}

RateReport rate_report(const std::string& problem, const Trace& trace) {
  RateReport report;
  report.problem = problem;
  report.solver = std::string(to_string(trace.solver.kind));
  report.iters = trace.records.empty() ? 0 : trace.records.size() - 1;
  report.certified = trace.certified;
  report.certificate_violations = trace.certificate_violations;
  report.worst_scaled_slack = trace.worst_scaled_slack;
  if (!trace.certified) {
    report.status = "uncertified";
    return report;
  }
  const double l0 = trace.records.front().lyapunov;
  bool ok = trace.certificate_violations == 0;
  for (const auto& rec : trace.records) {
    if (!std::isfinite(rec.bound)) continue;
    const double ratio = l0 > 0.0 ? rec.lyapunov / l0 : 0.0;
    const double bound = l0 > 0.0 ? rec.bound / l0 : 0.0;
    const double violation = ratio - bound;
    report.max_violation = std::max(report.max_violation, violation);
    report.final_ratio = ratio;
    report.final_bound = bound;
    if (!(violation <= kRateTol * (1.0 + bound))) ok = false;
  }
  report.status = ok ? "PASS" : "FAIL";
  return report;
}

RunResult run_experiment(const ExperimentConfig& config) {
  Experiment ex = prepare(config);
  RunResult result;
  result.trace = run(ex.oracle, ex.run);
  result.report = rate_report(ex.oracle.name, result.trace);
  return result;
}

Json to_json(const RateReport& report) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"problem", report.problem},
          {"solver", report.solver},
          {"iters", report.iters},
          {"certified", report.certified},
          {"certificate_violations", report.certificate_violations},
          {"worst_scaled_slack", finite_or_null(report.worst_scaled_slack)},
          {"max_violation", finite_or_null(report.max_violation)},
          {"final_ratio", finite_or_null(report.final_ratio)},
          {"final_bound", finite_or_null(report.final_bound)},
          {"status", report.status}};
}

namespace {

int status_code(const std::string& status) { return status == "FAIL" ? kExitFail : kExitPass; }

// Routes CSV and report according to the shared convention.
void emit(const std::optional<std::string>& csv_path, const std::string& csv, const Json& report,
          std::ostream& out, std::ostream& err) {
  if (csv_path) {
    write_file(*csv_path, csv);
    out << report.dump(2) << '\n';
  } else {
    out << csv;
    err << report.dump(2) << '\n';
  }
}

}  // namespace

int cmd_run(const std::string& config_path, const std::optional<std::string>& csv_path, std::size_t jobs,
            std::ostream& out, std::ostream& err) {
  std::vector<ExperimentConfig> configs;
  try {
    configs = configs_from_json(load_json(config_path));
    if (configs.size() > 1 && csv_path) throw ConfigError("--out applies to a single config; use per-config output");
    for (const auto& cfg : configs) (void)prepare(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (configs.size() == 1) {
    const RunResult result = run_experiment(configs.front());
    std::ostringstream csv;
    write_trace_csv(csv, result.trace);
    const auto path = csv_path ? csv_path : configs.front().output;
    emit(path, csv.str(), to_json(result.report), out, err);
    spdlog::info("{} on {}: {}", result.report.solver, result.report.problem, result.report.status);
    return status_code(result.report.status);
  }

  jobs = std::max<std::size_t>(1, jobs);
  std::vector<RateReport> reports(configs.size());
  auto task = [&configs](std::size_t i) {
    const RunResult result = run_experiment(configs[i]);
    if (configs[i].output) {
      std::ostringstream csv;
      write_trace_csv(csv, result.trace);
      write_file(*configs[i].output, csv.str());
    } else {
      spdlog::warn("batch entry {} has no output path; trace not written", i);
    }
    return result.report;
  };
  for (std::size_t start = 0; start < configs.size(); start += jobs) {
    const std::size_t stop = std::min(configs.size(), start + jobs);
    std::vector<std::future<RateReport>> pending;
    for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, task, i));
    for (std::size_t i = start; i < stop; ++i) reports[i] = pending[i - start].get();
  }
  Json all = Json::array();
  int code = kExitPass;
  for (const auto& r : reports) {
    all.push_back(to_json(r));
    code = std::max(code, status_code(r.status));
  }
  out << all.dump(2) << '\n';
  return code;
}

int cmd_flow(const FlowCommand& command, const std::optional<std::string>& csv_path, std::ostream& out,
             std::ostream& err) {
  FlowModel model;
  LyapunovKind lyapunov{};
  FlowState start;
  try {
    if (!(command.dt > 0.0)) throw ConfigError("--dt must be positive");
    ProblemOracle oracle = problem_from_json(load_json(command.problem_path));
    model = make_flow(parse_flow_kind(command.model), std::move(oracle));
    lyapunov = command.lyapunov ? parse_lyapunov_kind(*command.lyapunov) : default_lyapunov(model);
    (void)decay_law(model, lyapunov);
    start = initial_flow_state(model, model.oracle.x0, command.gamma0);
    if (!(command.t_end > start.t)) throw ConfigError("--t-end must exceed the initial time");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const ContinuousDecayReport report = continuous_decay_check(model, lyapunov, start, command.t_end, command.dt,
                                                                command.tol);
    std::ostringstream csv;
    write_trajectory_csv(csv, report);
    Json json = to_json(report);
    json["model"] = command.model;
    json["problem"] = model.oracle.name;
    emit(csv_path, csv.str(), json, out, err);
    return report.passed ? kExitPass : kExitFail;
  } catch (const DivergenceError& e) {
    Json json{{"model", command.model},
              {"status", "DIVERGED"},
              {"error", e.what()},
              {"last_valid", to_json(e.last_valid)}};
    (csv_path ? out : err) << json.dump(2) << '\n';
    return kExitFail;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_verify_lyapunov(const VerifyCommand& command, std::ostream& out, std::ostream& err) {
  Pairing pairing;
  try {
    if (command.samples == 0) throw ConfigError("--samples must be positive");
    if (command.c && !(*command.c > 0.0)) throw ConfigError("--c must be positive");
    pairing = command.problem_path ? make_pairing(command.pairing, problem_from_json(load_json(*command.problem_path)))
                                   : default_pairing(command.pairing);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto report = strong_condition_check(pairing, command.samples, command.seed, command.c);
  Json json = to_json(report);
  json["problem"] = pairing.oracle.name;
  out << json.dump(2) << '\n';
  return report.passed ? kExitPass : kExitFail;
}

int cmd_rates(const RatesCommand& command, const std::optional<std::string>& csv_path, std::ostream& out,
              std::ostream& err) {
  RuleSpec spec;
  try {
    spec = parse_rule(command.rule, command.b_coef);
    if (!(command.r > 0.0)) throw ConfigError("--r must be positive");
    if (!(command.mu_over_l >= 0.0 && command.mu_over_l <= 1.0)) throw ConfigError("--mu-over-l must lie in [0, 1]");
    (void)rho_bound(spec, command.r, command.mu_over_l, 1.0, 0);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto rows = rate_table(spec, command.r, command.mu_over_l, 1.0, command.k_max);
  double worst = kInf;
  bool ok = true;
  for (const auto& row : rows) {
    worst = std::min(worst, row.slack);
    if (row.slack < -kRateTol * (1.0 + row.rho_bound)) ok = false;
  }
  std::ostringstream csv;
  write_rates_csv(csv, rows);
  const Json report{{"rule", to_string(spec)},       {"r", command.r},
                    {"mu_over_l", command.mu_over_l}, {"k_max", command.k_max},
                    {"min_slack", worst},             {"status", ok ? "PASS" : "FAIL"}};
  emit(csv_path, csv.str(), report, out, err);
  return ok ? kExitPass : kExitFail;
}

}  // namespace convflow
