#pragma once

#include "convflow/flows.hpp"
#include "convflow/lyapunov.hpp"
#include "convflow/problems.hpp"
#include "convflow/state.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace convflow {

// A Lyapunov function bound to a field together with the constants of
//   -grad L . G >= c L^q + p^2   on the sampling domain.
// Prox-point pairings use the field G = -d with d = grad h(x) + q at x = prox_g(w, 1/L).
struct Pairing {
  std::string name;
  ProblemOracle oracle;
  std::optional<FlowModel> flow;  // empty for prox-point pairings
  LyapunovKind lyapunov = LyapunovKind::opt_gap;
  double q = 1.0;
  std::function<double(const FlowState&)> c;
  std::function<double(const FlowState&, const Vector& direction)> p_sq;
  bool prox_points = false;
  bool sublevel = false;  // restrict samples to {f <= f(x0)}
};

std::vector<std::string> pairing_names();

// Binds the named pairing to a problem; throws ConfigError when the problem does not meet its hypotheses.
Pairing make_pairing(std::string_view name, ProblemOracle oracle);
// The named pairing on its reference problem.
Pairing default_pairing(std::string_view name);
ProblemOracle default_pairing_problem(std::string_view name);

struct StrongConditionReport {
  std::string pairing;
  std::size_t samples = 0;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  std::uint64_t seed = 0;
  std::optional<double> c_override;
  double min_slack = kInf;
  double min_scaled_slack = kInf;  // slack / (1 + |L|^q)
  FlowState argmin;
  bool passed = false;
};

inline constexpr double kStrongTol = 1e-9;

// Samples `samples` admissible states and evaluates -grad L . G - c L^q - p^2.
// PASS iff every slack >= -kStrongTol (1 + |L|^q). A c override replaces c by a constant.
StrongConditionReport strong_condition_check(const Pairing& pairing, std::size_t samples, std::uint64_t seed,
                                             std::optional<double> c_override = {});

// Pairing from the flow's own decay law with p = 0.
StrongConditionReport strong_condition_check(const FlowModel& flow, LyapunovKind lyapunov, std::size_t samples,
                                             std::uint64_t seed);

}  // namespace convflow
