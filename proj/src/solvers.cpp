#include "convflow/solvers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace convflow {

namespace {

constexpr SolverKind kAllKinds[] = {
    SolverKind::ppa,      SolverKind::gd,     SolverKind::pg,       SolverKind::scaled_ppa, SolverKind::hb_gs,
    SolverKind::momentum, SolverKind::avd_gs, SolverKind::avd_grad, SolverKind::avd_extrap, SolverKind::nag,
    SolverKind::apg,      SolverKind::apg_fast_grad, SolverKind::new_apg,
};

bool has_v(SolverKind kind) {
  switch (kind) {
    case SolverKind::ppa:
    case SolverKind::gd:
    case SolverKind::pg:
    case SolverKind::scaled_ppa: return false;
    default: return true;
  }
}

bool has_gamma(SolverKind kind) {
  switch (kind) {
    case SolverKind::scaled_ppa:
    case SolverKind::avd_gs:
    case SolverKind::avd_grad:
    case SolverKind::avd_extrap:
    case SolverKind::nag:
    case SolverKind::apg:
    case SolverKind::apg_fast_grad:
    case SolverKind::new_apg: return true;
    default: return false;
  }
}

bool close_to(double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); }

void require_gamma(const SolverState& state, const char* who) {
  if (!(state.gamma > 0.0)) throw ParameterError(std::string(who) + ": gamma must be positive");
}

void require_v(const SolverState& state, const char* who) {
  if (state.v.size() != state.x.size()) throw ParameterError(std::string(who) + ": state is missing v");
}

SolverState next_from(const SolverState& state) {
  SolverState next;
  next.k = state.k + 1;
  next.gamma = state.gamma;
  next.alpha = state.alpha;
  next.grad_sum = state.grad_sum;
  return next;
}

double fixed_alpha(const ProblemOracle& oracle, const SolverParams& params) {
  if (params.alpha) return *params.alpha;
  switch (params.kind) {
    case SolverKind::gd:
    case SolverKind::pg: return 1.0 / oracle.lip;
    case SolverKind::hb_gs: return momentum_alpha(oracle.mu, oracle.lip, MomentumVariant::sqrt);
    default: return 1.0;
  }
}

}  // namespace

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::ppa: return "ppa";
    case SolverKind::gd: return "gd";
    case SolverKind::pg: return "pg";
    case SolverKind::scaled_ppa: return "scaled_ppa";
    case SolverKind::hb_gs: return "hb_gs";
    case SolverKind::momentum: return "momentum";
    case SolverKind::avd_gs: return "avd_gs";
    case SolverKind::avd_grad: return "avd_grad";
    case SolverKind::avd_extrap: return "avd_extrap";
    case SolverKind::nag: return "nag";
    case SolverKind::apg: return "apg";
    case SolverKind::apg_fast_grad: return "apg_fast_grad";
    case SolverKind::new_apg: return "new_apg";
  }
  return "unknown";
}

SolverKind parse_solver_kind(std::string_view name) {
  for (auto kind : kAllKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown solver '" + std::string(name) + "'");
}

SolverState step_ppa(const ProblemOracle& oracle, const SolverState& state, double alpha) {
  if (!oracle.has_prox_f()) throw UnsupportedSolver("ppa needs a proximal map of f");
  if (!(alpha > 0.0)) throw ParameterError("ppa: alpha must be positive");
  SolverState next = next_from(state);
  next.x = oracle.prox_f(state.x, alpha);
  next.last.alpha = alpha;
  next.last.prox_step = alpha;
  return next;
}

SolverState step_gd(const ProblemOracle& oracle, const SolverState& state, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("gd: alpha must be positive");
  SolverState next = next_from(state);
  next.x = state.x - alpha * oracle.grad_h(state.x);
  next.last.alpha = alpha;
  return next;
}

SolverState step_pg(const ProblemOracle& oracle, const SolverState& state, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("pg: alpha must be positive");
  SolverState next = next_from(state);
  const Vector y = state.x - alpha * oracle.grad_h(state.x);
  next.x = oracle.prox_g(y, alpha);
  next.y = y;
  next.last.alpha = alpha;
  next.last.prox_step = alpha;
  next.last.q = (y - next.x) / alpha;
  next.last.d_next = oracle.grad_h(next.x) + next.last.q;
  next.last.d_half = (state.x - next.x) / alpha;
  return next;
}

SolverState step_scaled_ppa(const ProblemOracle& oracle, const SolverState& state, double alpha) {
  if (!oracle.has_prox_f()) throw UnsupportedSolver("scaled_ppa needs a proximal map of f");
  if (!(alpha > 0.0)) throw ParameterError("scaled_ppa: alpha must be positive");
  require_gamma(state, "scaled_ppa");
  SolverState next = next_from(state);
  const double t = alpha / state.gamma;
  next.x = oracle.prox_f(state.x, t);
  next.gamma = gamma_step(state.gamma, alpha, oracle.mu);
  next.last.alpha = alpha;
  next.last.gamma = state.gamma;
  next.last.prox_step = t;
  return next;
}

SolverState step_hb_gs(const ProblemOracle& oracle, const SolverState& state, double alpha) {
  if (!(oracle.mu > 0.0)) throw UnsupportedSolver("hb_gs needs mu > 0");
  if (!(alpha > 0.0)) throw ParameterError("hb_gs: alpha must be positive");
  require_v(state, "hb_gs");
  SolverState next = next_from(state);
  next.x = (state.x + alpha * state.v) / (1.0 + alpha);
  next.v = (state.v + alpha * next.x - (alpha / oracle.mu) * oracle.grad_h(next.x)) / (1.0 + alpha);
  next.last.alpha = alpha;
  return next;
}

SolverState step_momentum(const ProblemOracle& oracle, const SolverState& state, MomentumVariant variant) {
  if (!(oracle.mu > 0.0)) throw UnsupportedSolver("momentum needs mu > 0");
  require_v(state, "momentum");
  const double alpha = momentum_alpha(oracle.mu, oracle.lip, variant);
  SolverState next = next_from(state);
  const Vector y = (state.x + alpha * state.v) / (1.0 + alpha);
  const Vector grad = oracle.grad_h(y);
  next.v = (state.v + alpha * y - (alpha / oracle.mu) * grad) / (1.0 + alpha);
  next.x = y - grad / oracle.lip;
  next.y = y;
  next.alpha = alpha;
  next.last.alpha = alpha;
  return next;
}

SolverState step_avd(const ProblemOracle& oracle, const SolverState& state, AvdVariant variant,
                     std::optional<double> alpha_in) {
  require_gamma(state, "avd");
  require_v(state, "avd");
  const double gamma = state.gamma;
  const double alpha = (variant == AvdVariant::gs && alpha_in) ? *alpha_in : avd_alpha(gamma, oracle.lip);
  if (!(alpha > 0.0)) throw ParameterError("avd: alpha must be positive");
  const double sg = std::sqrt(gamma);
  const double denom = 1.0 + alpha * sg;
  SolverState next = next_from(state);
  if (variant == AvdVariant::gs) {
    next.x = (state.x + alpha * sg * state.v) / denom;
    next.v = state.v - (alpha / sg) * oracle.grad_h(next.x);
  } else {
    const Vector y = (state.x + alpha * sg * state.v) / denom;
    const Vector grad = oracle.grad_h(y);
    next.v = state.v - (alpha / sg) * grad;
    next.x = variant == AvdVariant::grad ? Vector(y - grad / oracle.lip)
                                         : Vector((state.x + alpha * sg * next.v) / denom);
    next.y = y;
  }
  next.gamma = gamma / denom;
  next.alpha = alpha;
  next.last.alpha = alpha;
  next.last.gamma = gamma;
  return next;
}

SolverState step_nag(const ProblemOracle& oracle, const SolverState& state) {
  if (!oracle.smooth) throw UnsupportedSolver("nag is for smooth objectives; use apg or new_apg");
  require_gamma(state, "nag");
  require_v(state, "nag");
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  const double gamma = state.gamma;
  const double alpha = rule_alpha({StepRule::nag, 2.0}, gamma, lip);
  const Vector& y = state.y.size() == state.x.size() ? state.y : state.x;
  SolverState next = next_from(state);
  next.x = (y + alpha * state.v) / (1.0 + alpha);
  next.y = next.x - oracle.grad_h(next.x) / lip;
  const double denom = gamma + mu * alpha;
  next.v = (gamma * state.v + mu * alpha * next.x) / denom + (lip * alpha / denom) * (next.y - next.x);
  next.gamma = (mu * alpha + gamma) / (1.0 + alpha);
  next.alpha = alpha;
  next.last.alpha = alpha;
  next.last.gamma = gamma;
  return next;
}

SolverState step_apg(const ProblemOracle& oracle, const SolverState& state) {
  require_gamma(state, "apg");
  require_v(state, "apg");
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  const double alpha = std::isfinite(state.alpha) ? state.alpha : std::sqrt(state.gamma / lip);
  const Vector& y = state.y.size() == state.x.size() ? state.y : Vector(state.x - oracle.grad_h(state.x) / lip);
  const Vector w = (y + alpha * state.v) / (1.0 + alpha);
  const double s = 1.0 / (lip * (1.0 + alpha));
  SolverState next = next_from(state);
  next.x = oracle.prox_g(w, s);
  const Vector grad_next = oracle.grad_h(next.x);
  next.y = next.x - grad_next / lip;
  next.v = next.x + (next.y - y) / (alpha + mu / lip);
  next.alpha = std::sqrt((alpha * alpha + alpha * mu / lip) / (1.0 + alpha));
  next.gamma = gamma_step(state.gamma, alpha, mu);
  next.last.alpha = alpha;
  next.last.gamma = state.gamma;
  next.last.prox_step = s;
  next.last.q = (w - next.x) / s;
  next.last.d_next = grad_next + next.last.q;
  next.last.grad_prev = oracle.grad_h(state.x);
  return next;
}

SolverState step_apg_fast_grad(const ProblemOracle& oracle, const SolverState& state) {
  require_gamma(state, "apg_fast_grad");
  require_v(state, "apg_fast_grad");
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  const double gamma = state.gamma;
  const double alpha = std::sqrt(gamma / (4.0 * lip));
  const double beta = 1.0 / (2.0 * lip * alpha);
  const double ab = alpha * beta;
  const Vector y = state.x - ab * oracle.grad_h(state.x);
  const Vector w = (y + alpha * state.v) / (1.0 + alpha);
  const double s = ab / (1.0 + alpha);
  SolverState next = next_from(state);
  next.x = oracle.prox_g(w, s);
  next.last.q = (w - next.x) / s;
  next.last.d_next = oracle.grad_h(next.x) + next.last.q;
  next.v = (gamma * state.v + alpha * mu * next.x - alpha * next.last.d_next) / (gamma + alpha * mu);
  next.gamma = gamma_step(gamma, alpha, mu);
  next.y = y;
  next.alpha = alpha;
  next.grad_sum = (state.grad_sum + next.last.d_next.squaredNorm()) / (1.0 + alpha);
  next.last.alpha = alpha;
  next.last.gamma = gamma;
  next.last.prox_step = s;
  next.last.key_identity = 0.5 * ab * ab * lip + alpha * alpha / (2.0 * gamma) - ab;
  return next;
}

SolverState step_new_apg(const ProblemOracle& oracle, const SolverState& state) {
  require_gamma(state, "new_apg");
  require_v(state, "new_apg");
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  const double gamma = state.gamma;
  const double alpha = rule_alpha({StepRule::new_apg, 1.0}, gamma, lip);
  const double s = 1.0 / lip;
  const Vector y = (state.x + alpha * state.v) / (1.0 + alpha);
  SolverState next = next_from(state);
  next.x = oracle.prox_g(y - s * oracle.grad_h(y), s);
  const double denom = gamma + mu * alpha;
  next.v = (gamma * state.v + mu * alpha * y) / denom + (gamma * (1.0 + alpha) / denom) * (next.x - y) / alpha;
  next.gamma = gamma_step(gamma, alpha, mu);
  next.y = y;
  next.alpha = alpha;
  next.last.alpha = alpha;
  next.last.gamma = gamma;
  next.last.prox_step = s;
  next.last.d_f = (y - next.x) * lip;
  next.last.y_prev = y;
  return next;
}

std::vector<Vector> momentum_two_sequence(const ProblemOracle& oracle, const Vector& x0, const Vector& v0,
                                          MomentumVariant variant, std::size_t iters) {
  const double alpha = momentum_alpha(oracle.mu, oracle.lip, variant);
  const double a1 = 1.0 + alpha;
  std::vector<Vector> xs{x0};
  xs.reserve(iters + 1);
  Vector x = x0;
  Vector y = (x0 + alpha * v0) / a1;
  for (std::size_t k = 0; k < iters; ++k) {
    const Vector x_next = y - oracle.grad_h(y) / oracle.lip;
    Vector y_next = variant == MomentumVariant::sqrt
                        ? Vector(alpha * y / a1 - x / (a1 * a1) + (2.0 + alpha) / (a1 * a1) * x_next)
                        : Vector(alpha * alpha * y / (a1 * a1) - x / (a1 * a1) + 2.0 * x_next / a1);
    x = x_next;
    y = std::move(y_next);
    xs.push_back(x);
  }
  return xs;
}

void check_compatible(const ProblemOracle& oracle, const SolverParams& params) {
  const auto name = std::string(to_string(params.kind));
  if (params.alpha && !(*params.alpha > 0.0)) throw ConfigError(name + ": alpha must be positive");
  switch (params.kind) {
    case SolverKind::ppa:
    case SolverKind::scaled_ppa:
      if (!oracle.has_prox_f()) throw UnsupportedSolver(name + " needs a proximal map of f");
      break;
    case SolverKind::hb_gs:
    case SolverKind::momentum:
      if (!(oracle.mu > 0.0)) throw UnsupportedSolver(name + " needs mu > 0");
      [[fallthrough]];
    case SolverKind::gd:
    case SolverKind::avd_gs:
    case SolverKind::avd_grad:
    case SolverKind::avd_extrap:
    case SolverKind::nag:
      if (!oracle.smooth) throw UnsupportedSolver(name + " needs a smooth objective");
      break;
    case SolverKind::pg:
    case SolverKind::apg:
    case SolverKind::apg_fast_grad:
    case SolverKind::new_apg: break;
  }
}

SolverState initial_state(const ProblemOracle& oracle, const SolverParams& params, const Vector& x0,
                          std::optional<Vector> v0, std::optional<double> gamma0) {
  if (x0.size() != oracle.dim) throw ConfigError("x0 dimension does not match the problem");
  if (v0 && v0->size() != oracle.dim) throw ConfigError("v0 dimension does not match the problem");
  SolverState state;
  state.x = x0;
  if (has_v(params.kind)) state.v = v0.value_or(x0);
  if (has_gamma(params.kind)) {
    state.gamma = gamma0.value_or(oracle.lip);
    if (!(state.gamma > 0.0)) throw ConfigError("gamma0 must be positive");
  }
  if (params.kind == SolverKind::nag || params.kind == SolverKind::apg) {
    state.y = x0 - oracle.grad_h(x0) / oracle.lip;
  }
  if (params.kind == SolverKind::apg) state.alpha = std::sqrt(state.gamma / oracle.lip);
  state.last_grad_norm = gradient_mapping_norm(oracle, x0);
  return state;
}

SolverState advance(const ProblemOracle& oracle, const SolverParams& params, const SolverState& state) {
  switch (params.kind) {
    case SolverKind::ppa: return step_ppa(oracle, state, fixed_alpha(oracle, params));
    case SolverKind::gd: return step_gd(oracle, state, fixed_alpha(oracle, params));
    case SolverKind::pg: return step_pg(oracle, state, fixed_alpha(oracle, params));
    case SolverKind::scaled_ppa: return step_scaled_ppa(oracle, state, fixed_alpha(oracle, params));
    case SolverKind::hb_gs: return step_hb_gs(oracle, state, fixed_alpha(oracle, params));
    case SolverKind::momentum: return step_momentum(oracle, state, params.momentum);
    case SolverKind::avd_gs: return step_avd(oracle, state, AvdVariant::gs, params.alpha);
    case SolverKind::avd_grad: return step_avd(oracle, state, AvdVariant::grad);
    case SolverKind::avd_extrap: return step_avd(oracle, state, AvdVariant::extrap);
    case SolverKind::nag: return step_nag(oracle, state);
    case SolverKind::apg: return step_apg(oracle, state);
    case SolverKind::apg_fast_grad: return step_apg_fast_grad(oracle, state);
    case SolverKind::new_apg: return step_new_apg(oracle, state);
  }
  throw ConfigError("unknown solver");
}

LyapunovKind lyapunov_for(SolverKind kind) {
  switch (kind) {
    case SolverKind::ppa:
    case SolverKind::gd: return LyapunovKind::combined_mu;
    case SolverKind::pg: return LyapunovKind::opt_gap;
    case SolverKind::scaled_ppa: return LyapunovKind::scaled;
    case SolverKind::hb_gs:
    case SolverKind::momentum: return LyapunovKind::hb;
    default: return LyapunovKind::avd_nag;
  }
}

FlowState phase_point(const SolverState& state) {
  FlowState p;
  p.t = static_cast<double>(state.k);
  p.x = state.x;
  if (state.v.size() == state.x.size()) p.v = state.v;
  if (std::isfinite(state.gamma)) p.gamma = state.gamma;
  return p;
}

double certified_value(const ProblemOracle& oracle, const SolverParams& params, const SolverState& state) {
  const double value = evaluate(lyapunov_for(params.kind), oracle, phase_point(state));
  switch (params.kind) {
    case SolverKind::nag: return value - oracle.grad_h(state.x).squaredNorm() / (2.0 * oracle.lip);
    case SolverKind::apg_fast_grad: return value + state.grad_sum / (4.0 * oracle.lip);
    default: return value;
  }
}

bool is_certified(const ProblemOracle& oracle, const SolverParams& params) {
  switch (params.kind) {
    case SolverKind::gd:
      return fixed_alpha(oracle, params) <= 2.0 / (oracle.lip + oracle.mu) * (1.0 + 1e-12);
    case SolverKind::pg: return fixed_alpha(oracle, params) <= 2.0 / oracle.lip * (1.0 + 1e-12);
    case SolverKind::hb_gs:
    case SolverKind::avd_gs: return false;
    default: return true;
  }
}

StepCertificate certify_step(const ProblemOracle& oracle, const SolverParams& params, const SolverState& before,
                             const SolverState& after) {
  const LyapunovKind lyap = lyapunov_for(params.kind);
  const double l_before = evaluate(lyap, oracle, phase_point(before));
  const double l_after = evaluate(lyap, oracle, phase_point(after));
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  const double alpha = after.last.alpha;
  StepCertificate cert;
  switch (params.kind) {
    case SolverKind::ppa: cert.slack = l_before / (1.0 + mu * alpha) - l_after; break;
    case SolverKind::gd:
      if (is_certified(oracle, params)) cert.slack = (1.0 - mu * alpha) * l_before - l_after;
      break;
    case SolverKind::pg: {
      const double df = l_after - l_before;
      if (alpha <= 2.0 / lip * (1.0 + 1e-12))
        cert.slack = alpha * (lip * alpha / 2.0 - 1.0) * after.last.d_next.squaredNorm() - df;
      if (lip == mu || alpha <= 2.0 / (lip - mu) * (1.0 + 1e-12))
        cert.aux_slack = alpha * ((lip - mu) * alpha / 2.0 - 1.0) * after.last.d_half.squaredNorm() - df;
      break;
    }
    case SolverKind::scaled_ppa:
    case SolverKind::momentum:
    case SolverKind::new_apg: cert.slack = l_before / (1.0 + alpha) - l_after; break;
    case SolverKind::hb_gs:
      cert.slack = -alpha * l_after + alpha * alpha / (2.0 * mu) * oracle.grad_h(after.x).squaredNorm() -
                   (l_after - l_before);
      break;
    case SolverKind::avd_gs:
      cert.slack = -alpha * std::sqrt(before.gamma) * l_after +
                   0.5 * alpha * alpha * oracle.grad_h(after.x).squaredNorm() - (l_after - l_before);
      break;
    case SolverKind::avd_grad:
    case SolverKind::avd_extrap:
      cert.slack = l_before / (1.0 + alpha * std::sqrt(before.gamma)) - l_after;
      break;
    case SolverKind::nag: {
      const double e_before = l_before - oracle.grad_h(before.x).squaredNorm() / (2.0 * lip);
      const double e_after = l_after - oracle.grad_h(after.x).squaredNorm() / (2.0 * lip);
      cert.slack = e_before / (1.0 + alpha) - e_after;
      break;
    }
    case SolverKind::apg: {
      const Vector mixed = after.last.grad_prev + after.last.q;
      cert.slack = -alpha * l_after - mixed.squaredNorm() / (2.0 * lip) - (l_after - l_before);
      break;
    }
    case SolverKind::apg_fast_grad:
      cert.slack = -alpha * l_after - after.last.d_next.squaredNorm() / (4.0 * lip) - (l_after - l_before);
      cert.aux_slack = -std::abs(after.last.key_identity + 1.0 / (4.0 * lip));
      break;
  }
  if (params.kind == SolverKind::new_apg) {
    const Vector& y = after.last.y_prev;
    const Vector& d = after.last.d_f;
    const double lhs = d.dot(y - oracle.x_star);
    const double rhs = oracle.f_gap(after.x) + 0.5 * mu * (y - oracle.x_star).squaredNorm() +
                       d.squaredNorm() / (2.0 * lip);
    cert.aux_slack = lhs - rhs;
  }
  return cert;
}

RateBound::RateBound(const ProblemOracle& oracle, const SolverParams& params, const SolverState& start,
                     double value0)
    : oracle_(&oracle), params_(params), gamma0_(start.gamma), value0_(value0) {
  if (params.kind == SolverKind::pg && oracle.mu == 0.0 && oracle.radius_r0 &&
      close_to(fixed_alpha(oracle, params), 1.0 / oracle.lip) &&
      oracle.eval_f(start.x) <= oracle.level() + 1e-12 * (1.0 + std::abs(oracle.level()))) {
    const double r0 = *oracle.radius_r0;
    pg_case4_alpha_ = 1.0 / (2.0 * oracle.lip * r0 * r0);
  }
}

void RateBound::observe(const SolverState& state) {
  ++k_;
  const auto& oracle = *oracle_;
  const double mu = oracle.mu;
  const double lip = oracle.lip;
  const double alpha = state.last.alpha;
  auto closed_form = [&](StepRule rule) {
    const RuleSpec spec{rule, rule == StepRule::new_apg ? 1.0 : 0.0};
    if (rule != StepRule::avd && gamma0_ < mu) return kNaN;
    return rho_bound(spec, gamma0_, rule == StepRule::avd ? 0.0 : mu, lip, k_);
  };
  switch (params_.kind) {
    case SolverKind::ppa: product_ /= 1.0 + mu * alpha; ratio_ = product_; break;
    case SolverKind::gd:
      ratio_ = is_certified(oracle, params_) ? (product_ *= 1.0 - mu * alpha) : kNaN;
      break;
    case SolverKind::pg:
      if (!is_certified(oracle, params_)) {
        ratio_ = kNaN;
      } else if (mu > 0.0 && close_to(alpha, 1.0 / lip)) {
        ratio_ = (product_ /= 1.0 + mu / lip);
      } else if (pg_case4_alpha_ && value0_ > 0.0) {
        ratio_ = sequence_decay(4, value0_, DecayParams{{}, *pg_case4_alpha_}, k_) / value0_;
      } else {
        ratio_ = 1.0;
      }
      break;
    case SolverKind::scaled_ppa:
    case SolverKind::momentum: ratio_ = (product_ /= 1.0 + alpha); break;
    case SolverKind::hb_gs:
    case SolverKind::avd_gs: ratio_ = kNaN; break;
    case SolverKind::avd_grad:
    case SolverKind::avd_extrap: ratio_ = closed_form(StepRule::avd); break;
    case SolverKind::nag: ratio_ = closed_form(StepRule::nag); break;
    case SolverKind::apg: ratio_ = closed_form(StepRule::apg); break;
    case SolverKind::apg_fast_grad: ratio_ = closed_form(StepRule::apg_fast_grad); break;
    case SolverKind::new_apg: ratio_ = closed_form(StepRule::new_apg); break;
  }
}

Trace run(const ProblemOracle& oracle, const RunConfig& config) {
  check_compatible(oracle, config.solver);
  Trace trace;
  trace.solver = config.solver;
  trace.certified = is_certified(oracle, config.solver);

  SolverState state = initial_state(oracle, config.solver, config.x0, config.v0, config.gamma0);
  const double value0 = certified_value(oracle, config.solver, state);
  RateBound bound(oracle, config.solver, state, value0);

  auto record_of = [&](const SolverState& s, double value) {
    TraceRecord rec;
    rec.k = s.k;
    rec.f_gap = oracle.f_gap(s.x);
    rec.lyapunov = value;
    rec.grad_norm = s.last_grad_norm;
    rec.alpha = s.last.alpha;
    rec.gamma = s.gamma;
    rec.slack = s.slack;
    rec.aux_slack = s.aux_slack;
    return rec;
  };

  TraceRecord first = record_of(state, value0);
  first.bound = trace.certified || config.solver.kind == SolverKind::pg ? value0 : kNaN;
  trace.records.push_back(first);
  trace.records.reserve(config.iters + 1);

  constexpr std::size_t kMaxWarnings = 5;
  for (std::size_t k = 0; k < config.iters; ++k) {
    SolverState next = advance(oracle, config.solver, state);
    const StepCertificate cert = certify_step(oracle, config.solver, state, next);
    next.slack = cert.slack;
    next.aux_slack = cert.aux_slack;
    next.last_grad_norm = gradient_mapping_norm(oracle, next.x);
    bound.observe(next);

    const double l_before = evaluate(lyapunov_for(config.solver.kind), oracle, phase_point(state));
    const double next_value = certified_value(oracle, config.solver, next);
    TraceRecord rec = record_of(next, next_value);
    rec.bound = bound.ratio() * value0;
    if (trace.certified && std::isfinite(cert.slack)) {
      const double scaled = cert.slack / (1.0 + std::abs(l_before));
      trace.worst_scaled_slack = std::min(trace.worst_scaled_slack, scaled);
      if (scaled < -kCertificateTol) {
        rec.violated = true;
        if (trace.certificate_violations++ < kMaxWarnings) {
          spdlog::warn("{}: certificate violated at step {} (slack {:.3e})", to_string(config.solver.kind),
                       next.k, cert.slack);
        }
      }
    }
    trace.records.push_back(rec);
    state = std::move(next);
    if (!state.x.allFinite()) {
      spdlog::warn("{}: iterate left the finite range at step {}", to_string(config.solver.kind), state.k);
      break;
    }
    if (config.stop_tol && state.last_grad_norm < *config.stop_tol) break;
  }
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace convflow
