#pragma once

#include "convflow/io.hpp"
#include "convflow/solvers.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace convflow {

struct ExperimentConfig {
  Json problem;
  SolverKind solver = SolverKind::gd;
  // Fixed step: a number, or "1/L" / "2/(L+mu)" resolved against the problem.
  std::optional<std::variant<double, std::string>> alpha;
  MomentumVariant variant = MomentumVariant::sqrt;
  std::size_t iters = 100;
  // x0: omitted (problem default), an array, or "random" (uniform in the radius-10 box around x*).
  Json x0;
  std::optional<Vector> v0;
  std::optional<double> gamma0;
  std::optional<std::string> output;
  std::uint64_t seed = 0;
  std::optional<double> stop_tol;
};

ExperimentConfig config_from_json(const Json& spec);
// A single config object or an array of them.
std::vector<ExperimentConfig> configs_from_json(const Json& spec);

struct RateReport {
  std::string problem;
  std::string solver;
  std::size_t iters = 0;
  bool certified = false;
  std::size_t certificate_violations = 0;
  double worst_scaled_slack = kInf;
  double max_violation = -kInf;  // max_k of L_k/L_0 - bound_k/L_0
  double final_ratio = kNaN;
  double final_bound = kNaN;
  std::string status;  // PASS, FAIL or uncertified
};

inline constexpr double kRateTol = 1e-9;

RateReport rate_report(const std::string& problem, const Trace& trace);

struct Experiment {
  ProblemOracle oracle;
  RunConfig run;
};

// Builds the oracle and resolves defaults; throws ConfigError or UnsupportedSolver.
Experiment prepare(const ExperimentConfig& config);

struct RunResult {
  Trace trace;
  RateReport report;
};

RunResult run_experiment(const ExperimentConfig& config);

Json to_json(const RateReport& report);

// Exit codes shared by every command.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

// Each command emits its CSV to `csv_path` when given (otherwise to `out`) and its JSON
// report to `out` when the CSV went to a file (otherwise to `err`).
int cmd_run(const std::string& config_path, const std::optional<std::string>& csv_path, std::size_t jobs,
            std::ostream& out, std::ostream& err);

struct FlowCommand {
  std::string model;
  std::string problem_path;
  double t_end = 10.0;
  double dt = 1e-3;
  std::optional<double> gamma0;
  std::optional<std::string> lyapunov;
  double tol = 1e-3;
};

int cmd_flow(const FlowCommand& command, const std::optional<std::string>& csv_path, std::ostream& out,
             std::ostream& err);

struct VerifyCommand {
  std::string pairing;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::optional<double> c;
  std::optional<std::string> problem_path;
};

// Report JSON always goes to `out`.
int cmd_verify_lyapunov(const VerifyCommand& command, std::ostream& out, std::ostream& err);

struct RatesCommand {
  std::string rule;
  double r = 1.0;  // gamma0 / L
  double mu_over_l = 0.0;
  std::size_t k_max = 100;
  double b_coef = 0.0;
};

int cmd_rates(const RatesCommand& command, const std::optional<std::string>& csv_path, std::ostream& out,
              std::ostream& err);

}  // namespace convflow
