#include "convflow/strong_condition.hpp"

#include "convflow/rng.hpp"

#include <algorithm>
#include <cmath>

namespace convflow {

namespace {

constexpr std::string_view kNames[] = {"gd_combined", "gd_convex", "scaled_gradient", "heavy_ball",
                                       "avd",         "hnag",      "pg_strong",       "pg_convex"};

constexpr double kBoxRadius = 10.0;

std::function<double(const FlowState&)> constant(double c) {
  return [c](const FlowState&) { return c; };
}

double require_r0(const ProblemOracle& oracle, std::string_view name) {
  if (!oracle.radius_r0 || !(*oracle.radius_r0 > 0.0))
    throw ConfigError(std::string(name) + " needs a problem with a positive coercivity radius R0");
  return *oracle.radius_r0;
}

void require_strong(const ProblemOracle& oracle, std::string_view name) {
  if (!(oracle.mu > 0.0)) throw ConfigError(std::string(name) + " needs mu > 0");
}

}  // namespace

std::vector<std::string> pairing_names() { return {std::begin(kNames), std::end(kNames)}; }

Pairing make_pairing(std::string_view name, ProblemOracle oracle) {
  Pairing p;
  p.name = std::string(name);
  const double mu = oracle.mu;
  if (name == "gd_combined") {
    require_strong(oracle, name);
    p.flow = make_flow(FlowKind::gradient, oracle);
    p.lyapunov = LyapunovKind::combined_mu;
    p.c = constant(mu);
    p.p_sq = [](const FlowState&, const Vector& d) { return d.squaredNorm(); };
  } else if (name == "gd_convex") {
    const double r0 = require_r0(oracle, name);
    p.flow = make_flow(FlowKind::gradient, oracle);
    p.lyapunov = LyapunovKind::opt_gap;
    p.q = 2.0;
    p.c = constant(1.0 / (r0 * r0));
    p.p_sq = [](const FlowState&, const Vector&) { return 0.0; };
    p.sublevel = true;
  } else if (name == "scaled_gradient") {
    p.flow = make_flow(FlowKind::scaled_gradient, oracle);
    p.lyapunov = LyapunovKind::scaled;
    p.c = constant(1.0);
    p.p_sq = [](const FlowState& s, const Vector& d) { return d.squaredNorm() / *s.gamma; };
  } else if (name == "heavy_ball") {
    p.flow = make_flow(FlowKind::heavy_ball, oracle);
    p.lyapunov = LyapunovKind::hb;
    p.c = constant(1.0);
    p.p_sq = [mu](const FlowState& s, const Vector&) { return 0.5 * mu * (s.x - *s.v).squaredNorm(); };
  } else if (name == "avd") {
    p.flow = make_flow(FlowKind::avd_r3, oracle);
    p.lyapunov = LyapunovKind::avd_nag;
    p.c = [](const FlowState& s) { return std::sqrt(*s.gamma); };
    p.p_sq = [](const FlowState&, const Vector&) { return 0.0; };
  } else if (name == "hnag") {
    p.flow = make_flow(FlowKind::hnag, oracle);
    p.lyapunov = LyapunovKind::avd_nag;
    p.c = constant(1.0);
    p.p_sq = [mu, beta_fn = p.flow->beta_fn](const FlowState& s, const Vector& d) {
      return beta_fn(s.t) * d.squaredNorm() + 0.5 * mu * (s.x - *s.v).squaredNorm();
    };
  } else if (name == "pg_strong") {
    require_strong(oracle, name);
    p.lyapunov = LyapunovKind::opt_gap;
    p.c = constant(mu);
    p.p_sq = [](const FlowState&, const Vector& d) { return 0.5 * d.squaredNorm(); };
    p.prox_points = true;
  } else if (name == "pg_convex") {
    const double r0 = require_r0(oracle, name);
    p.lyapunov = LyapunovKind::opt_gap;
    p.q = 2.0;
    p.c = constant(1.0 / (2.0 * r0 * r0));
    p.p_sq = [](const FlowState&, const Vector& d) { return 0.5 * d.squaredNorm(); };
    p.prox_points = true;
    p.sublevel = true;
  } else {
    throw ConfigError("unknown pairing '" + std::string(name) + "'");
  }
  p.oracle = std::move(oracle);
  return p;
}

ProblemOracle default_pairing_problem(std::string_view name) {
  const Vector logcosh_x0{{2.0, -1.0, 0.5}};
  if (name == "gd_combined" || name == "heavy_ball" || name == "hnag")
    return make_quadratic(Vector{{1.0, 4.0, 10.0}}, Vector{{1.0, -2.0, 0.5}});
  if (name == "gd_convex" || name == "scaled_gradient" || name == "avd") return make_logcosh(1.0, logcosh_x0);
  if (name == "pg_strong") return make_random_lasso(40, 10, 3);
  if (name == "pg_convex") return make_random_lasso(20, 50, 1);
  throw ConfigError("unknown pairing '" + std::string(name) + "'");
}

Pairing default_pairing(std::string_view name) { return make_pairing(name, default_pairing_problem(name)); }

namespace {

struct Sample {
  FlowState state;
  Vector direction;  // grad f(x), or the subgradient d at a prox point
  double decrease = 0.0;
};

// Box samples every block; gamma is drawn from [0.01, mu + 10].
FlowState draw_flow_state(const Pairing& p, CounterRng& rng) {
  const auto& oracle = p.oracle;
  FlowState s;
  s.x = rng.uniform_box(oracle.x_star, kBoxRadius);
  if (flow_has_v(p.flow->kind)) s.v = rng.uniform_box(oracle.x_star, kBoxRadius);
  if (flow_has_gamma(p.flow->kind)) s.gamma = rng.uniform(0.01, oracle.mu + 10.0);
  return s;
}

Vector draw_sublevel_point(const ProblemOracle& oracle, CounterRng& rng) {
  const double r0 = *oracle.radius_r0;
  const Vector u = rng.uniform_box(Vector::Zero(oracle.dim), r0);
  return oracle.x_star + rng.uniform() * u;
}

std::optional<Sample> draw(const Pairing& p, CounterRng& rng) {
  const auto& oracle = p.oracle;
  const double level = oracle.level();
  auto inside = [&](const Vector& x) {
    return oracle.eval_f(x) <= level + 1e-12 * (1.0 + std::abs(level));
  };
  Sample out;
  if (p.prox_points) {
    const Vector w = p.sublevel ? draw_sublevel_point(oracle, rng) : rng.uniform_box(oracle.x_star, kBoxRadius);
    const double s = 1.0 / oracle.lip;
    const Vector x = oracle.prox_g(w, s);
    if (p.sublevel && !inside(x)) return std::nullopt;
    out.state.x = x;
    out.direction = oracle.grad_h(x) + (w - x) / s;
    out.decrease = out.direction.squaredNorm();
    return out;
  }
  if (p.sublevel) {
    out.state.x = draw_sublevel_point(oracle, rng);
    if (!inside(out.state.x)) return std::nullopt;
  } else {
    out.state = draw_flow_state(p, rng);
  }
  const FlowState g = field(*p.flow, out.state);
  const LyapunovGradient dl = gradient(p.lyapunov, oracle, out.state);
  double dot = dl.x.dot(g.x);
  if (g.v) dot += dl.v.dot(*g.v);
  if (g.gamma) dot += dl.gamma * *g.gamma;
  out.decrease = -dot;
  out.direction = oracle.grad_h(out.state.x);
  return out;
}

}  // namespace

StrongConditionReport strong_condition_check(const Pairing& pairing, std::size_t samples, std::uint64_t seed,
                                             std::optional<double> c_override) {
  if (samples == 0) throw ConfigError("strong_condition_check: samples must be positive");
  if (c_override && !(*c_override > 0.0)) throw ConfigError("strong_condition_check: c must be positive");
  StrongConditionReport report;
  report.pairing = pairing.name;
  report.samples = samples;
  report.seed = seed;
  report.c_override = c_override;

  CounterRng rng(seed, 303);
  const std::size_t max_attempts = pairing.sublevel ? 100 * samples : samples;
  bool ok = true;
  while (report.accepted < samples && report.attempts < max_attempts) {
    ++report.attempts;
    const auto sample = draw(pairing, rng);
    if (!sample) continue;
    ++report.accepted;
    const FlowState& s = sample->state;
    const double value = evaluate(pairing.lyapunov, pairing.oracle, s);
    const double lq = pairing.q == 1.0 ? value : std::pow(std::max(value, 0.0), pairing.q);
    const double c = c_override ? *c_override : pairing.c(s);
    const double slack = sample->decrease - c * lq - pairing.p_sq(s, sample->direction);
    const double scale = 1.0 + std::abs(lq);
    if (slack < -kStrongTol * scale) ok = false;
    report.min_slack = std::min(report.min_slack, slack);
    if (slack / scale < report.min_scaled_slack) {
      report.min_scaled_slack = slack / scale;
      report.argmin = s;
    }
  }
  report.passed = ok && report.accepted == samples;
  return report;
}

StrongConditionReport strong_condition_check(const FlowModel& flow, LyapunovKind lyapunov, std::size_t samples,
                                             std::uint64_t seed) {
  const DecayLaw law = decay_law(flow, lyapunov);
  Pairing p;
  p.name = std::string(to_string(flow.kind)) + ":" + std::string(to_string(lyapunov));
  p.oracle = flow.oracle;
  p.flow = flow;
  p.lyapunov = lyapunov;
  p.q = law.q;
  p.c = law.c;
  p.p_sq = [](const FlowState&, const Vector&) { return 0.0; };
  p.sublevel = law.q > 1.0;
  return strong_condition_check(p, samples, seed);
}

}  // namespace convflow
