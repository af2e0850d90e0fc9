#pragma once

#include "convflow/lyapunov.hpp"
#include "convflow/problems.hpp"
#include "convflow/schedules.hpp"
#include "convflow/state.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace convflow {

enum class SolverKind {
  ppa,
  gd,
  pg,
  scaled_ppa,
  hb_gs,
  momentum,
  avd_gs,
  avd_grad,
  avd_extrap,
  nag,
  apg,
  apg_fast_grad,
  new_apg,
};

std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view name);

enum class AvdVariant { gs, grad, extrap };

struct SolverParams {
  SolverKind kind = SolverKind::gd;
  std::optional<double> alpha;  // fixed step where the scheme takes one
  MomentumVariant momentum = MomentumVariant::sqrt;
};

// Quantities produced by the step that led to a state.
struct StepRecord {
  double alpha = kNaN;      // alpha_k used
  double gamma = kNaN;      // gamma_k before the step
  double prox_step = kNaN;  // s_k or t_k handed to the proximal map
  Vector d_next;            // d_{k+1} = grad h(x_{k+1}) + q_{k+1}
  Vector d_half;            // d_{k+1/2} = (x_k - x_{k+1}) / alpha (pg)
  Vector d_f;               // (y - x_{k+1}) L (new_apg)
  Vector q;                 // q_{k+1}, subgradient of g at x_{k+1}
  Vector grad_prev;         // grad h(x_k) (apg certificate)
  Vector y_prev;            // y_k (new_apg)
  double key_identity = kNaN;  // apg_fast_grad: a^2 b^2 L/2 + a^2/(2 gamma) - a b
};

struct SolverState {
  std::size_t k = 0;
  Vector x;
  Vector v;  // empty when the scheme has no v
  Vector y;  // empty when the scheme has no y
  double gamma = kNaN;
  double alpha = kNaN;     // apg carries alpha as state
  double grad_sum = 0.0;   // apg_fast_grad: sum_i (rho_k / rho_i) |d_{i+1}|^2
  double last_grad_norm = kNaN;
  double slack = kNaN;      // certificate (or one-step lemma) slack of the step into this state
  double aux_slack = kNaN;  // secondary inequality of the same step
  StepRecord last;
};

SolverState step_ppa(const ProblemOracle& oracle, const SolverState& state, double alpha);
SolverState step_gd(const ProblemOracle& oracle, const SolverState& state, double alpha);
SolverState step_pg(const ProblemOracle& oracle, const SolverState& state, double alpha);
SolverState step_scaled_ppa(const ProblemOracle& oracle, const SolverState& state, double alpha);
SolverState step_hb_gs(const ProblemOracle& oracle, const SolverState& state, double alpha);
SolverState step_momentum(const ProblemOracle& oracle, const SolverState& state,
                          MomentumVariant variant = MomentumVariant::sqrt);
SolverState step_avd(const ProblemOracle& oracle, const SolverState& state, AvdVariant variant,
                     std::optional<double> alpha = {});
SolverState step_nag(const ProblemOracle& oracle, const SolverState& state);
SolverState step_apg(const ProblemOracle& oracle, const SolverState& state);
SolverState step_apg_fast_grad(const ProblemOracle& oracle, const SolverState& state);
SolverState step_new_apg(const ProblemOracle& oracle, const SolverState& state);

// Two-sequence form of the momentum method (x_k, y_k only); returns x_0..x_iters.
std::vector<Vector> momentum_two_sequence(const ProblemOracle& oracle, const Vector& x0, const Vector& v0,
                                          MomentumVariant variant, std::size_t iters);

void check_compatible(const ProblemOracle& oracle, const SolverParams& params);

SolverState initial_state(const ProblemOracle& oracle, const SolverParams& params, const Vector& x0,
                          std::optional<Vector> v0 = {}, std::optional<double> gamma0 = {});

SolverState advance(const ProblemOracle& oracle, const SolverParams& params, const SolverState& state);

LyapunovKind lyapunov_for(SolverKind kind);
FlowState phase_point(const SolverState& state);

// The quantity the scheme's rate theorem bounds: L_k, except nag (L_k - |grad f(x_k)|^2/(2L))
// and apg_fast_grad (L_k + grad_sum/(4L)).
double certified_value(const ProblemOracle& oracle, const SolverParams& params, const SolverState& state);

// Whether the scheme carries a proved per-step contraction for these parameters.
bool is_certified(const ProblemOracle& oracle, const SolverParams& params);

struct StepCertificate {
  double slack = kNaN;
  double aux_slack = kNaN;
};

// Per-step inequality of the scheme, evaluated between consecutive states.
StepCertificate certify_step(const ProblemOracle& oracle, const SolverParams& params, const SolverState& before,
                             const SolverState& after);

struct TraceRecord {
  std::size_t k = 0;
  double f_gap = 0.0;
  double lyapunov = 0.0;  // certified_value
  double bound = kNaN;    // theorem bound on lyapunov, absolute
  double slack = kNaN;
  double aux_slack = kNaN;
  double grad_norm = 0.0;
  double alpha = kNaN;
  double gamma = kNaN;
  bool violated = false;
};

struct RunConfig {
  SolverParams solver;
  Vector x0;
  std::optional<Vector> v0;
  std::optional<double> gamma0;
  std::size_t iters = 100;
  std::optional<double> stop_tol;  // stop once the gradient-mapping norm drops below
};

struct Trace {
  SolverParams solver;
  bool certified = false;
  std::vector<TraceRecord> records;
  std::size_t certificate_violations = 0;
  double worst_scaled_slack = kInf;  // min over steps of slack / (1 + L_k)
  SolverState final_state;
};

inline constexpr double kCertificateTol = 1e-9;

Trace run(const ProblemOracle& oracle, const RunConfig& config);

// Theorem bound on certified_value_k / certified_value_0 given the schedule so far; NaN if none.
class RateBound {
 public:
  RateBound(const ProblemOracle& oracle, const SolverParams& params, const SolverState& start,
            double value0);
  // Feed the state reached after each step, in order.
  void observe(const SolverState& state);
  double ratio() const { return ratio_; }

 private:
  const ProblemOracle* oracle_;
  SolverParams params_;
  double gamma0_;
  double value0_;
  double product_ = 1.0;
  std::size_t k_ = 0;
  double ratio_ = 1.0;
  std::optional<double> pg_case4_alpha_;
};

}  // namespace convflow
