#include "convflow/harness.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("convflow");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("OPT_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("OPT_LOG_LEVEL '{}' not recognised; using info", level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Lyapunov-certified first-order convex optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> run_out;
  std::size_t jobs = 1;
  auto* run = app.add_subcommand("run", "Run one experiment config or a batch");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  run->add_option("--out", run_out, "Trace CSV path");
  run->add_option("--jobs", jobs, "Concurrent batch entries")->check(CLI::PositiveNumber);

  convflow::FlowCommand flow_cmd;
  std::optional<std::string> flow_out;
  auto* flow = app.add_subcommand("flow", "Integrate a flow and check its Lyapunov decay");
  flow->add_option("--model", flow_cmd.model, "gradient | scaled_gradient | heavy_ball | avd_r3 | hnag")->required();
  flow->add_option("--problem", flow_cmd.problem_path, "Problem JSON")->required();
  flow->add_option("--t-end", flow_cmd.t_end, "Final time")->required();
  flow->add_option("--dt", flow_cmd.dt, "RK4 step")->required();
  flow->add_option("--gamma0", flow_cmd.gamma0, "Initial gamma");
  flow->add_option("--lyapunov", flow_cmd.lyapunov, "Lyapunov function (default: the flow's own)");
  flow->add_option("--tol", flow_cmd.tol, "Relative tolerance on the decay bound");
  flow->add_option("--out", flow_out, "Trajectory CSV path");

  convflow::VerifyCommand verify_cmd;
  auto* verify = app.add_subcommand("verify-lyapunov", "Sample the strong Lyapunov condition of a pairing");
  verify->add_option("--pairing", verify_cmd.pairing, "Pairing name")->required();
  verify->add_option("--samples", verify_cmd.samples, "Number of samples");
  verify->add_option("--seed", verify_cmd.seed, "Generator seed");
  verify->add_option("--c", verify_cmd.c, "Replace the rate constant c");
  verify->add_option("--problem", verify_cmd.problem_path, "Problem JSON (default: the pairing's reference)");

  convflow::RatesCommand rates_cmd;
  std::optional<std::string> rates_out;
  auto* rates = app.add_subcommand("rates", "Tabulate a step rule's contraction product against its bound");
  rates->add_option("--rule", rates_cmd.rule, "apg | b0 | apg_fast_grad | new_apg | nag | avd | gk_ak")->required();
  rates->add_option("--r", rates_cmd.r, "gamma0 / L")->required();
  rates->add_option("--mu-over-l", rates_cmd.mu_over_l, "mu / L")->required();
  rates->add_option("--kmax", rates_cmd.k_max, "Last k")->required();
  rates->add_option("--b", rates_cmd.b_coef, "B coefficient of gk_ak");
  rates->add_option("--out", rates_out, "Table CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : convflow::kExitUsage;
  }

  try {
    if (*run) return convflow::cmd_run(config_path, run_out, jobs, std::cout, std::cerr);
    if (*flow) return convflow::cmd_flow(flow_cmd, flow_out, std::cout, std::cerr);
    if (*verify) return convflow::cmd_verify_lyapunov(verify_cmd, std::cout, std::cerr);
    if (*rates) return convflow::cmd_rates(rates_cmd, rates_out, std::cout, std::cerr);
  } catch (const convflow::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return convflow::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return convflow::kExitFail;
  }
  return convflow::kExitUsage;
}
