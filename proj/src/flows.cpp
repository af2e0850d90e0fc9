#include "convflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace convflow {

std::string_view to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::gradient: return "gradient";
    case FlowKind::scaled_gradient: return "scaled_gradient";
    case FlowKind::heavy_ball: return "heavy_ball";
    case FlowKind::avd_r3: return "avd_r3";
    case FlowKind::hnag: return "hnag";
  }
  return "unknown";
}

FlowKind parse_flow_kind(std::string_view name) {
  for (auto kind : {FlowKind::gradient, FlowKind::scaled_gradient, FlowKind::heavy_ball, FlowKind::avd_r3,
                    FlowKind::hnag}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown flow model '" + std::string(name) + "'");
}

bool flow_has_v(FlowKind kind) {
  return kind == FlowKind::heavy_ball || kind == FlowKind::avd_r3 || kind == FlowKind::hnag;
}

bool flow_has_gamma(FlowKind kind) {
  return kind == FlowKind::scaled_gradient || kind == FlowKind::avd_r3 || kind == FlowKind::hnag;
}

FlowModel make_flow(FlowKind kind, ProblemOracle oracle, std::function<double(double)> beta_fn) {
  if (!oracle.smooth) throw InvalidModel("flows are integrated for smooth objectives only");
  if (kind == FlowKind::heavy_ball && !(oracle.mu > 0.0))
    throw InvalidModel("heavy_ball flow divides by mu and needs mu > 0");
  if (!beta_fn) {
    const double beta = 1.0 / oracle.lip;
    beta_fn = [beta](double) { return beta; };
  }
  return FlowModel{kind, std::move(oracle), std::move(beta_fn)};
}

FlowState initial_flow_state(const FlowModel& model, const Vector& x0, std::optional<double> gamma0) {
  FlowState s;
  s.x = x0;
  if (flow_has_v(model.kind)) s.v = x0;
  if (model.kind == FlowKind::avd_r3) {
    s.t = 1.0;
    s.gamma = gamma0.value_or(4.0);
  } else if (flow_has_gamma(model.kind)) {
    s.gamma = gamma0.value_or(1.0);
  }
  return s;
}

FlowState equilibrium(const FlowModel& model, double gamma) {
  FlowState s;
  s.x = model.oracle.x_star;
  if (flow_has_v(model.kind)) s.v = model.oracle.x_star;
  if (flow_has_gamma(model.kind)) s.gamma = gamma;
  return s;
}

FlowState field(const FlowModel& model, const FlowState& state) {
  const auto& oracle = model.oracle;
  if (state.x.size() != oracle.dim) throw InvalidModel("flow state dimension does not match the problem");
  if (flow_has_v(model.kind) && !state.v) throw InvalidModel("flow state is missing its v block");
  if (flow_has_gamma(model.kind) && !state.gamma) throw InvalidModel("flow state is missing its gamma block");

  const Vector grad = oracle.grad_h(state.x);
  FlowState d;
  d.t = 1.0;
  switch (model.kind) {
    case FlowKind::gradient: d.x = -grad; break;
    case FlowKind::scaled_gradient: {
      const double gamma = *state.gamma;
      d.x = -grad / gamma;
      d.gamma = oracle.mu - gamma;
      break;
    }
    case FlowKind::heavy_ball: {
      const Vector& v = *state.v;
      d.x = v - state.x;
      d.v = state.x - v - grad / oracle.mu;
      break;
    }
    case FlowKind::avd_r3: {
      const double gamma = *state.gamma;
      const double sg = std::sqrt(gamma);
      d.x = sg * (*state.v - state.x);
      d.v = -grad / sg;
      d.gamma = -gamma * sg;
      break;
    }
    case FlowKind::hnag: {
      const double gamma = *state.gamma;
      const double beta = model.beta_fn(state.t);
      const Vector& v = *state.v;
      d.x = v - state.x - beta * grad;
      d.v = (oracle.mu / gamma) * (state.x - v) - grad / gamma;
      d.gamma = oracle.mu - gamma;
      break;
    }
  }
  return d;
}

namespace {

FlowState advance(const FlowState& s, double h, const FlowState& d) {
  FlowState out;
  out.t = s.t + h * d.t;
  out.x = s.x + h * d.x;
  if (s.v) out.v = *s.v + h * *d.v;
  if (s.gamma) out.gamma = *s.gamma + h * *d.gamma;
  return out;
}

FlowState rk4_step(const FlowModel& model, const FlowState& s, double h) {
  const FlowState k1 = field(model, s);
  const FlowState k2 = field(model, advance(s, 0.5 * h, k1));
  const FlowState k3 = field(model, advance(s, 0.5 * h, k2));
  const FlowState k4 = field(model, advance(s, h, k3));
  FlowState out;
  out.t = s.t + h;
  out.x = s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  if (s.v) out.v = *s.v + (h / 6.0) * (*k1.v + 2.0 * *k2.v + 2.0 * *k3.v + *k4.v);
  if (s.gamma) out.gamma = *s.gamma + (h / 6.0) * (*k1.gamma + 2.0 * *k2.gamma + 2.0 * *k3.gamma + *k4.gamma);
  return out;
}

bool valid(const FlowState& s) {
  if (!s.x.allFinite()) return false;
  if (s.v && !s.v->allFinite()) return false;
  if (s.gamma && !(std::isfinite(*s.gamma) && *s.gamma > 0.0)) return false;
  return true;
}

}  // namespace

std::vector<FlowState> integrate(const FlowModel& model, const FlowState& state0, double t_end, double dt) {
  if (!(dt > 0.0)) throw InvalidModel("integrate: dt must be positive");
  if (!(t_end > state0.t)) throw InvalidModel("integrate: t_end must exceed the initial time");
  const double span = t_end - state0.t;
  const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  std::vector<FlowState> traj;
  traj.reserve(steps + 1);
  traj.push_back(state0);
  for (std::size_t i = 1; i <= steps; ++i) {
    const FlowState& cur = traj.back();
    const double target = i == steps ? t_end : state0.t + static_cast<double>(i) * dt;
    FlowState next = rk4_step(model, cur, target - cur.t);
    next.t = target;
    if (!valid(next)) {
      throw DivergenceError("integration diverged at t = " + std::to_string(target), cur);
    }
    traj.push_back(std::move(next));
  }
  return traj;
}

DecayLaw decay_law(const FlowModel& model, LyapunovKind lyapunov) {
  const auto& oracle = model.oracle;
  const double mu = oracle.mu;
  const double lip = oracle.lip;
  auto constant = [](double c) { return [c](const FlowState&) { return c; }; };
  auto unsupported = [&] {
    return ConfigError("no strong Lyapunov pairing for flow '" + std::string(to_string(model.kind)) +
                       "' with '" + std::string(to_string(lyapunov)) + "'");
  };
  switch (model.kind) {
    case FlowKind::gradient:
      if (lyapunov == LyapunovKind::dist_sq) return {lyapunov, 1.0, constant(2.0 * mu * lip / (lip + mu))};
      if (lyapunov != LyapunovKind::opt_gap && lyapunov != LyapunovKind::combined_mu) throw unsupported();
      if (mu > 0.0) return {lyapunov, 1.0, constant(lyapunov == LyapunovKind::opt_gap ? 2.0 * mu : mu)};
      if (!oracle.radius_r0 || !(*oracle.radius_r0 > 0.0))
        throw ConfigError("gradient flow with mu = 0 needs a positive coercivity radius R0");
      return {lyapunov, 2.0, constant(1.0 / (*oracle.radius_r0 * *oracle.radius_r0))};
    case FlowKind::scaled_gradient:
      if (lyapunov != LyapunovKind::scaled) throw unsupported();
      return {lyapunov, 1.0, constant(1.0)};
    case FlowKind::heavy_ball:
      if (lyapunov != LyapunovKind::hb) throw unsupported();
      return {lyapunov, 1.0, constant(1.0)};
    case FlowKind::avd_r3:
      if (lyapunov != LyapunovKind::avd_nag) throw unsupported();
      return {lyapunov, 1.0, [](const FlowState& s) { return std::sqrt(*s.gamma); }};
    case FlowKind::hnag:
      if (lyapunov != LyapunovKind::avd_nag) throw unsupported();
      return {lyapunov, 1.0, constant(1.0)};
  }
  throw unsupported();
}

LyapunovKind default_lyapunov(const FlowModel& model) {
  switch (model.kind) {
    case FlowKind::gradient:
      return model.oracle.mu > 0.0 ? LyapunovKind::combined_mu : LyapunovKind::opt_gap;
    case FlowKind::scaled_gradient: return LyapunovKind::scaled;
    case FlowKind::heavy_ball: return LyapunovKind::hb;
    case FlowKind::avd_r3:
    case FlowKind::hnag: return LyapunovKind::avd_nag;
  }
  return LyapunovKind::opt_gap;
}

ContinuousDecayReport continuous_decay_check(const FlowModel& model, LyapunovKind lyapunov,
                                             const FlowState& state0, double t_end, double dt, double tol) {
  const DecayLaw law = decay_law(model, lyapunov);
  const auto& oracle = model.oracle;
  if (law.q > 1.0 && oracle.eval_f(state0.x) > oracle.level() * (1.0 + 1e-12) + 1e-12)
    throw ConfigError("initial state lies outside the sublevel set that defines R0");

  ContinuousDecayReport report;
  report.flow = model.kind;
  report.lyapunov = lyapunov;
  report.t0 = state0.t;
  report.t_end = t_end;
  report.dt = dt;
  report.tol = tol;

  const auto traj = integrate(model, state0, t_end, dt);
  const double l0 = evaluate(lyapunov, oracle, traj.front());
  const double floor = 1e-13 * (1.0 + std::abs(oracle.f_star));
  double c_integral = 0.0;
  double c_prev = law.c(traj.front());
  report.rows.reserve(traj.size());
  bool ok = true;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const FlowState& s = traj[i];
    if (i > 0) {
      const double c_now = law.c(s);
      c_integral += 0.5 * (c_prev + c_now) * (s.t - traj[i - 1].t);
      c_prev = c_now;
    }
    double bound = 0.0;
    if (l0 > 0.0) {
      if (law.q == 1.0) {
        bound = l0 * std::exp(-c_integral);
      } else {
        const double base = (law.q - 1.0) * c_integral + std::pow(l0, 1.0 - law.q);
        bound = std::pow(base, 1.0 / (1.0 - law.q));
      }
    }
    TrajectoryRow row;
    row.t = s.t;
    row.lyapunov = evaluate(lyapunov, oracle, s);
    row.bound = bound;
    row.x_norm_err = (s.x - oracle.x_star).norm();
    row.gamma = s.gamma.value_or(kNaN);
    if (bound > 0.0) report.worst_ratio = std::max(report.worst_ratio, row.lyapunov / bound);
    if (row.lyapunov > bound * (1.0 + tol) + floor) {
      if (!report.first_violation_t) report.first_violation_t = s.t;
      ok = false;
    }
    report.rows.push_back(row);
  }
  report.passed = ok;
  return report;
}

}  // namespace convflow
