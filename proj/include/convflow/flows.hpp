#pragma once

#include "convflow/lyapunov.hpp"
#include "convflow/problems.hpp"
#include "convflow/state.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace convflow {

enum class FlowKind { gradient, scaled_gradient, heavy_ball, avd_r3, hnag };

std::string_view to_string(FlowKind kind);
FlowKind parse_flow_kind(std::string_view name);

struct FlowModel {
  FlowKind kind = FlowKind::gradient;
  ProblemOracle oracle;
  std::function<double(double)> beta_fn;  // hnag damping; constant 1/L by default
};

// Validates the oracle/kind pairing and fills the default damping.
FlowModel make_flow(FlowKind kind, ProblemOracle oracle, std::function<double(double)> beta_fn = {});

bool flow_has_v(FlowKind kind);
bool flow_has_gamma(FlowKind kind);

// Default start: v0 = x0, gamma0 = 1 (avd_r3: t0 = 1, gamma0 = 4 so that gamma = 4/t^2).
FlowState initial_flow_state(const FlowModel& model, const Vector& x0, std::optional<double> gamma0 = {});
FlowState equilibrium(const FlowModel& model, double gamma = 1.0);

// Time derivative; the t slot of the result is 1.
FlowState field(const FlowModel& model, const FlowState& state);

struct DivergenceError : Error {
  DivergenceError(const std::string& what, FlowState last) : Error(what), last_valid(std::move(last)) {}
  FlowState last_valid;
};

// Classical RK4 with fixed step; the final step is shortened to land on t_end.
std::vector<FlowState> integrate(const FlowModel& model, const FlowState& state0, double t_end, double dt);

// Rate constants of the strong Lyapunov condition for a (flow, Lyapunov) pairing.
struct DecayLaw {
  LyapunovKind lyapunov = LyapunovKind::opt_gap;
  double q = 1.0;
  std::function<double(const FlowState&)> c;
};

DecayLaw decay_law(const FlowModel& model, LyapunovKind lyapunov);
LyapunovKind default_lyapunov(const FlowModel& model);

struct TrajectoryRow {
  double t = 0.0;
  double lyapunov = 0.0;
  double bound = 0.0;
  double x_norm_err = 0.0;
  double gamma = kNaN;
};

struct ContinuousDecayReport {
  FlowKind flow = FlowKind::gradient;
  LyapunovKind lyapunov = LyapunovKind::opt_gap;
  double t0 = 0.0, t_end = 0.0, dt = 0.0, tol = 0.0;
  std::vector<TrajectoryRow> rows;
  double worst_ratio = 0.0;  // max of L(t) / bound(t)
  std::optional<double> first_violation_t;
  bool passed = false;
};

// Integrates and compares L(x(t)) with the bound obtained from the strong condition.
ContinuousDecayReport continuous_decay_check(const FlowModel& model, LyapunovKind lyapunov,
                                             const FlowState& state0, double t_end, double dt,
                                             double tol = 1e-3);

}  // namespace convflow
