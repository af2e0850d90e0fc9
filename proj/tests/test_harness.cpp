#include "convflow/harness.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace convflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("convflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& text = {}) const {
    const auto p = (path / name).string();
    if (!text.empty()) std::ofstream(p) << text;
    return p;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kGdConfig = R"js({
  "problem": {"kind": "quadratic", "eigs": [1, 100], "b": [1, -2]},
  "solver": {"kind": "gd", "alpha": "2/(L+mu)"},
  "iters": 200
})js";

int cli(const std::string& args) {
  const char* exe = std::getenv("CONVFLOW_CLI");
  REQUIRE(exe != nullptr);
  const std::string command = std::string(exe) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

bool have_cli() { return std::getenv("CONVFLOW_CLI") != nullptr; }

}  // namespace

TEST_CASE("config parsing and defaults") {
  const auto cfg = config_from_json(Json::parse(kGdConfig));
  CHECK(cfg.solver == SolverKind::gd);
  CHECK(cfg.iters == 200);
  REQUIRE(cfg.alpha);
  CHECK(std::get<std::string>(*cfg.alpha) == "2/(L+mu)");
  const auto ex = prepare(cfg);
  CHECK(*ex.run.solver.alpha == doctest::Approx(2.0 / 101.0));
  CHECK((ex.run.x0 - ex.oracle.x0).norm() == 0.0);

  const auto short_form = config_from_json(Json::parse(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "nag"})"));
  CHECK(short_form.solver == SolverKind::nag);
  CHECK(short_form.iters == 100);

  const auto batch = configs_from_json(Json::parse(std::string("[") + kGdConfig + "," + kGdConfig + "]"));
  CHECK(batch.size() == 2);
}

TEST_CASE("config errors") {
  auto bad = [](const std::string& text) { return config_from_json(Json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "gd", "iter": 5})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": {"kind": "gd", "step": 1}})"),
                  ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "bfgs"})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": {"kind": "gd", "alpha": -1}})"),
                  ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": {"kind": "gd", "alpha": "1/mu"}})"),
                  ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "gd", "iters": -3})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "gd", "x0": "somewhere"})"),
                  ConfigError);
  CHECK_THROWS_AS(bad(R"({"solver": "gd"})"), ConfigError);
  CHECK_THROWS_AS(configs_from_json(Json::array()), ConfigError);

  const auto incompatible =
      config_from_json(Json::parse(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "momentum"})"));
  CHECK_THROWS_AS(prepare(incompatible), UnsupportedSolver);
  const auto bad_problem =
      config_from_json(Json::parse(R"({"problem": {"kind": "quadratic", "eigs": [0], "b": [1]}, "solver": "gd"})"));
  CHECK_THROWS_AS(prepare(bad_problem), ConfigError);
  const auto bad_dim =
      config_from_json(Json::parse(R"({"problem": {"kind": "logcosh", "x0": [1]}, "solver": "gd", "x0": [1, 2]})"));
  CHECK_THROWS_AS(prepare(bad_dim), ConfigError);
}

TEST_CASE("random x0 follows the seed") {
  auto cfg = config_from_json(Json::parse(
      R"({"problem": {"kind": "quadratic", "eigs": [1, 2, 3], "b": [0, 0, 0]}, "solver": "gd", "x0": "random", "seed": 9})"));
  const auto a = prepare(cfg).run.x0;
  const auto b = prepare(cfg).run.x0;
  CHECK((a - b).norm() == 0.0);
  CHECK(a.cwiseAbs().maxCoeff() <= 10.0);
  cfg.seed = 10;
  CHECK((prepare(cfg).run.x0 - a).norm() > 0.0);
}

TEST_CASE("rate reports") {
  {
    const auto result = run_experiment(config_from_json(Json::parse(kGdConfig)));
    CHECK(result.report.status == "PASS");
    CHECK(result.report.certified);
    CHECK(result.report.iters == 200);
    CHECK(result.report.final_bound == doctest::Approx(std::pow(99.0 / 101.0, 200)));
    CHECK(result.report.final_ratio <= result.report.final_bound);
  }
  {
    const auto result = run_experiment(config_from_json(Json::parse(
        R"({"problem": {"kind": "lasso", "generate": {"rows": 50, "cols": 100, "seed": 2}},
            "solver": "new_apg", "iters": 500})")));
    CHECK(result.report.status == "PASS");
    CHECK(result.report.certificate_violations == 0);
  }
  {
    const auto result = run_experiment(config_from_json(Json::parse(
        R"({"problem": {"kind": "quadratic", "eigs": [1, 100], "b": [1, -2]},
            "solver": {"kind": "gd", "alpha": 0.03}, "iters": 20})")));
    CHECK(result.report.status == "uncertified");
    CHECK_FALSE(result.report.certified);
    CHECK(to_json(result.report)["final_bound"].is_null());
  }
}

TEST_CASE("rate report fails when the trace beats its bound") {
  Trace trace;
  trace.certified = true;
  trace.solver.kind = SolverKind::gd;
  trace.records.resize(3);
  const double lyap[] = {1.0, 0.5, 0.3};
  const double bound[] = {1.0, 0.5, 0.25};
  for (int k = 0; k < 3; ++k) {
    trace.records[k].k = k;
    trace.records[k].lyapunov = lyap[k];
    trace.records[k].bound = bound[k];
  }
  const auto report = rate_report("toy", trace);
  CHECK(report.status == "FAIL");
  CHECK(report.max_violation == doctest::Approx(0.05));
  trace.records[2].lyapunov = 0.25 * (1.0 + 1e-10);
  CHECK(rate_report("toy", trace).status == "PASS");
  trace.records[2].lyapunov = 0.25;
  trace.certificate_violations = 1;
  CHECK(rate_report("toy", trace).status == "FAIL");
}

TEST_CASE("cmd_run writes CSV and report with the shared routing") {
  TempDir dir;
  const auto config = dir.file("gd.json", kGdConfig);
  std::ostringstream out, err;
  CHECK(cmd_run(config, {}, 1, out, err) == kExitPass);
  const auto csv = out.str();
  CHECK(csv.rfind("k,f_gap,lyapunov,bound,slack,grad_norm,alpha,gamma\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 202);
  CHECK(Json::parse(err.str())["status"] == "PASS");

  std::ostringstream out2, err2;
  const auto csv_path = dir.file("trace.csv");
  CHECK(cmd_run(config, csv_path, 1, out2, err2) == kExitPass);
  CHECK(slurp(csv_path) == csv);
  CHECK(Json::parse(out2.str())["status"] == "PASS");

  std::ostringstream out3, err3;
  CHECK(cmd_run(dir.file("missing.json"), {}, 1, out3, err3) == kExitUsage);
  CHECK(cmd_run(dir.file("typo.json", R"({"problem": {"kind": "logcosh", "x0": [1]}, "solvr": "gd"})"), {}, 1, out3,
                err3) == kExitUsage);
  CHECK(cmd_run(dir.file("broken.json", "{"), {}, 1, out3, err3) == kExitUsage);
}

TEST_CASE("identical configs give byte-identical CSV") {
  TempDir dir;
  const auto config = dir.file("apg.json", R"({
    "problem": {"kind": "lasso", "generate": {"rows": 20, "cols": 50, "seed": 1}},
    "solver": "apg", "iters": 300, "x0": "random", "seed": 4})");
  std::ostringstream a, b, e1, e2;
  CHECK(cmd_run(config, {}, 1, a, e1) == kExitPass);
  CHECK(cmd_run(config, {}, 1, b, e2) == kExitPass);
  CHECK(a.str() == b.str());
  CHECK(a.str().size() > 1000);
}

TEST_CASE("batch runs in parallel and matches serial output") {
  TempDir dir;
  Json batch = Json::array();
  const char* solvers[] = {"gd", "nag", "apg", "new_apg", "scaled_ppa", "momentum"};
  for (const char* s : solvers) {
    batch.push_back({{"problem", {{"kind", "quadratic"}, {"eigs", {1, 10, 100}}, {"b", {1, 0, -1}}}},
                     {"solver", s},
                     {"iters", 150},
                     {"output", dir.file(std::string(s) + ".csv")}});
  }
  const auto config = dir.file("batch.json", batch.dump());
  std::ostringstream out1, err1;
  CHECK(cmd_run(config, {}, 4, out1, err1) == kExitPass);
  std::vector<std::string> parallel;
  for (const char* s : solvers) parallel.push_back(slurp(dir.file(std::string(s) + ".csv")));
  std::ostringstream out2, err2;
  CHECK(cmd_run(config, {}, 1, out2, err2) == kExitPass);
  for (std::size_t i = 0; i < std::size(solvers); ++i) {
    CHECK(slurp(dir.file(std::string(solvers[i]) + ".csv")) == parallel[i]);
    CHECK(parallel[i].size() > 100);
  }
  const auto reports = Json::parse(out1.str());
  CHECK(reports.size() == std::size(solvers));
  CHECK(out1.str() == out2.str());
  std::ostringstream out3, err3;
  CHECK(cmd_run(config, dir.file("single.csv"), 2, out3, err3) == kExitUsage);
}

TEST_CASE("cmd_flow pass, fail and divergence") {
  TempDir dir;
  const auto logcosh = dir.file("lc.json", R"({"kind": "logcosh", "scale": 1, "x0": [2, -1, 0.5]})");
  std::ostringstream out, err;
  CHECK(cmd_flow(FlowCommand{"scaled_gradient", logcosh, 10.0, 1e-3}, {}, out, err) == kExitPass);
  CHECK(out.str().rfind("t,lyapunov,bound,x_norm_err,gamma\n", 0) == 0);
  CHECK(Json::parse(err.str())["status"] == "PASS");
  // 1/gamma grows like e^t, so a coarse step leaves the RK4 stability region before t = 10.
  std::ostringstream o1, e1;
  CHECK(cmd_flow(FlowCommand{"scaled_gradient", logcosh, 10.0, 1e-2}, {}, o1, e1) == kExitFail);
  CHECK(Json::parse(e1.str())["status"] == "FAIL");

  const auto quad = dir.file("q.json", R"({"kind": "quadratic", "eigs": [1, 4], "b": [1, 1]})");
  std::ostringstream o2, e2;
  CHECK(cmd_flow(FlowCommand{"avd_r3", quad, 100.0, 1e-2}, dir.file("avd.csv"), o2, e2) == kExitPass);
  CHECK(Json::parse(o2.str())["status"] == "PASS");

  const auto stiff = dir.file("stiff.json", R"({"kind": "quadratic", "eigs": [1, 1000000], "b": [1, 1]})");
  std::ostringstream o3, e3;
  CHECK(cmd_flow(FlowCommand{"gradient", stiff, 100.0, 1.0}, {}, o3, e3) == kExitFail);
  const auto diverged = Json::parse(e3.str());
  CHECK(diverged["status"] == "DIVERGED");
  CHECK(diverged["last_valid"].is_object());

  std::ostringstream o4, e4;
  CHECK(cmd_flow(FlowCommand{"gradient", quad, 5.0, 1e-2, {}, std::string("hb")}, {}, o4, e4) == kExitUsage);
  CHECK(cmd_flow(FlowCommand{"heavy_ball", logcosh, 5.0, 1e-2}, {}, o4, e4) == kExitUsage);
  CHECK(cmd_flow(FlowCommand{"gradient", quad, 5.0, -1.0}, {}, o4, e4) == kExitUsage);
  CHECK(cmd_flow(FlowCommand{"swirl", quad, 5.0, 1e-2}, {}, o4, e4) == kExitUsage);
}

TEST_CASE("cmd_verify_lyapunov") {
  std::ostringstream out, err;
  CHECK(cmd_verify_lyapunov(VerifyCommand{"heavy_ball", 2000, 0}, out, err) == kExitPass);
  CHECK(Json::parse(out.str())["status"] == "PASS");
  std::ostringstream o2, e2;
  CHECK(cmd_verify_lyapunov(VerifyCommand{"heavy_ball", 2000, 0, 3.0}, o2, e2) == kExitFail);
  const auto failed = Json::parse(o2.str());
  CHECK(failed["status"] == "FAIL");
  CHECK(failed["min_slack"].get<double>() < 0.0);
  std::ostringstream o3, e3;
  CHECK(cmd_verify_lyapunov(VerifyCommand{"hnag", 2000, 0}, o3, e3) == kExitPass);
  CHECK(cmd_verify_lyapunov(VerifyCommand{"nonexistent", 10, 0}, o3, e3) == kExitUsage);
  CHECK(cmd_verify_lyapunov(VerifyCommand{"hnag", 0, 0}, o3, e3) == kExitUsage);
}

TEST_CASE("cmd_rates") {
  std::ostringstream out, err;
  CHECK(cmd_rates(RatesCommand{"b0", 1.0, 0.0, 50}, {}, out, err) == kExitPass);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "k,rho_measured,rho_bound,slack");
  const double s2 = std::sqrt(2.0);
  for (int k = 0; k <= 50; ++k) {
    REQUIRE(std::getline(lines, line));
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    CHECK(std::stoi(cell) == k);
    std::getline(row, cell, ',');
    const double measured = std::stod(cell);
    std::getline(row, cell, ',');
    const double bound = std::stod(cell);
    CHECK(bound == doctest::Approx(std::pow((s2 + 1.0) / (s2 + 1.0 + k), 2)).epsilon(1e-15));
    if (k == 0) CHECK(measured == 1.0);
  }
  CHECK(Json::parse(err.str())["status"] == "PASS");
  for (const char* rule : {"apg", "new_apg", "nag", "apg_fast_grad", "avd"}) {
    std::ostringstream o, e;
    CAPTURE(rule);
    CHECK(cmd_rates(RatesCommand{rule, 0.5, 0.01, 10000}, {}, o, e) == kExitPass);
  }
  std::ostringstream o, e;
  CHECK(cmd_rates(RatesCommand{"gk_ak", 1.0, 0.0, 10, 0.25}, {}, o, e) == kExitUsage);
  CHECK(cmd_rates(RatesCommand{"apg", 0.5, 1.0, 10}, {}, o, e) == kExitUsage);
  CHECK(cmd_rates(RatesCommand{"fastest", 1.0, 0.0, 10}, {}, o, e) == kExitUsage);
}

TEST_CASE("command-line binary exit codes") {
  if (!have_cli()) {
    MESSAGE("CONVFLOW_CLI not set; skipping binary checks");
    return;
  }
  TempDir dir;
  const auto config = dir.file("gd.json", kGdConfig);
  const auto out = dir.file("trace.csv");
  CHECK(cli("run --config " + config + " --out " + out) == 0);
  const auto first = slurp(out);
  CHECK(cli("run --config " + config + " --out " + out) == 0);
  CHECK(slurp(out) == first);
  CHECK(cli("run --config " + dir.file("nope.json")) == 2);
  CHECK(cli("run") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("verify-lyapunov --pairing heavy_ball --samples 500 --seed 0") == 0);
  CHECK(cli("verify-lyapunov --pairing heavy_ball --samples 500 --seed 0 --c 3") == 1);
  CHECK(cli("rates --rule b0 --r 1 --mu-over-l 0 --kmax 20") == 0);
  const auto stiff = dir.file("stiff.json", R"({"kind": "quadratic", "eigs": [1, 1000000], "b": [1, 1]})");
  CHECK(cli("flow --model gradient --problem " + stiff + " --t-end 100 --dt 1") == 1);
  const auto uncertified = dir.file("gd3.json", R"({"problem": {"kind": "quadratic", "eigs": [1, 100], "b": [1, -2]},
      "solver": {"kind": "gd", "alpha": 0.03}, "iters": 10})");
  CHECK(cli("run --config " + uncertified) == 0);
  CHECK(::setenv("OPT_LOG_LEVEL", "quiet", 1) == 0);
  CHECK(cli("rates --rule nag --r 1 --mu-over-l 0.5 --kmax 20") == 0);
  ::unsetenv("OPT_LOG_LEVEL");
}
