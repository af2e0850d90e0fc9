#include "convflow/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace convflow {

double gamma_step(double gamma, double alpha, double mu) {
  if (!(gamma > 0.0)) throw ScheduleError("gamma_step: gamma must be positive");
  if (!(alpha > 0.0)) throw ScheduleError("gamma_step: alpha must be positive");
  if (!(mu >= 0.0)) throw ScheduleError("gamma_step: mu must be nonnegative");
  return (gamma + alpha * mu) / (1.0 + alpha);
}

double gamma_closed_form(double gamma0, double mu, std::span<const double> t_seq) {
  if (!(gamma0 > 0.0)) throw ScheduleError("gamma_closed_form: gamma0 must be positive");
  if (!(mu >= 0.0)) throw ScheduleError("gamma_closed_form: mu must be nonnegative");
  if (mu == 0.0) {
    double t_sum = 0.0;
    for (double t : t_seq) t_sum += t;
    return gamma0 / (1.0 + gamma0 * t_sum);
  }
  // P - 1 = expm1(sum log1p(t_i mu)) keeps (P - 1)/mu accurate for small mu.
  double log_p = 0.0;
  for (double t : t_seq) log_p += std::log1p(t * mu);
  const double p_minus_one = std::expm1(log_p);
  const double p = 1.0 + p_minus_one;
  if (std::isinf(p)) return mu;
  return gamma0 * p / (1.0 + gamma0 * p_minus_one / mu);
}

double solve_alpha_quadratic(double gamma, double lip, double b_coef) {
  if (!(gamma > 0.0) || !(lip > 0.0) || !(b_coef >= 0.0))
    throw ScheduleError("solve_alpha_quadratic: need gamma > 0, L > 0, B >= 0");
  // Both terms of the numerator are nonnegative, so no cancellation occurs.
  const double bg = b_coef * gamma;
  return (bg + std::sqrt(bg * bg + 4.0 * lip * gamma)) / (2.0 * lip);
}

RuleSpec parse_rule(std::string_view name, double b_coef) {
  if (name == "apg" || name == "b0") return {StepRule::apg, 0.0};
  if (name == "apg_fast_grad") return {StepRule::apg_fast_grad, 0.0};
  if (name == "new_apg") return {StepRule::new_apg, 1.0};
  if (name == "nag") return {StepRule::nag, 2.0};
  if (name == "avd") return {StepRule::avd, 0.0};
  if (name == "gk_ak") return {StepRule::gk_ak, b_coef};
  throw ScheduleError("unknown step rule '" + std::string(name) + "'");
}

std::string to_string(const RuleSpec& spec) {
  switch (spec.rule) {
    case StepRule::gk_ak: return "gk_ak";
    case StepRule::apg: return "apg";
    case StepRule::apg_fast_grad: return "apg_fast_grad";
    case StepRule::new_apg: return "new_apg";
    case StepRule::nag: return "nag";
    case StepRule::avd: return "avd";
  }
  return "unknown";
}

double rule_alpha(const RuleSpec& spec, double gamma, double lip) {
  switch (spec.rule) {
    case StepRule::gk_ak: return solve_alpha_quadratic(gamma, lip, spec.b_coef);
    case StepRule::apg: return solve_alpha_quadratic(gamma, lip, 0.0);
    case StepRule::apg_fast_grad: return solve_alpha_quadratic(gamma, 4.0 * lip, 0.0);
    case StepRule::new_apg: return solve_alpha_quadratic(gamma, lip, 1.0);
    case StepRule::nag: {
      // L a^2 = gamma (2 + a) is L a^2 = (2 gamma)(1 + a/2).
      return (gamma + std::sqrt(gamma * gamma + 8.0 * lip * gamma)) / (2.0 * lip);
    }
    case StepRule::avd: return avd_alpha(gamma, lip);
  }
  throw ScheduleError("rule_alpha: unknown rule");
}

double rule_gamma_next(const RuleSpec& spec, double gamma, double alpha, double mu) {
  if (spec.rule == StepRule::avd) return gamma / (1.0 + alpha * std::sqrt(gamma));
  return gamma_step(gamma, alpha, mu);
}

double rule_contraction_step(const RuleSpec& spec, double gamma, double alpha) {
  return spec.rule == StepRule::avd ? alpha * std::sqrt(gamma) : alpha;
}

namespace {

double squared(double v) { return v * v; }

double linear_branch(double rate, std::size_t k) {
  return std::pow(1.0 + std::sqrt(rate), -static_cast<double>(k));
}

// alpha_k <= sqrt(r) bounds the per-step gain by 1/(1 + sqrt(1 + sqrt(r))); for r >= 1 the
// looser 1/(1 + sqrt(1 + r)) is used.
double b0_head(double r) { return 1.0 + std::sqrt(1.0 + std::max(r, std::sqrt(r))); }

double b0_bound(double r, double mu_over_l, double kd, std::size_t k) {
  const double head = b0_head(r);
  return std::min(squared(head / (head + std::sqrt(r) * kd)), linear_branch(mu_over_l, k));
}

double b_half_bound(double r, double mu_over_l, double kd, std::size_t k) {
  return std::min(squared(2.0 / (2.0 + std::sqrt(r) * kd)), linear_branch(mu_over_l, k));
}

}  // namespace

double rho_bound(const RuleSpec& spec, double gamma0, double mu, double lip, std::size_t k) {
  if (!(gamma0 > 0.0) || !(lip > 0.0) || !(mu >= 0.0))
    throw ScheduleError("rho_bound: need gamma0 > 0, L > 0, mu >= 0");
  if (spec.rule != StepRule::avd && gamma0 < mu)
    throw ScheduleError("rho_bound: gamma0 < mu violates the rate theorem hypothesis");
  const double r = gamma0 / lip;
  const double q = mu / lip;
  const double kd = static_cast<double>(k);
  double bound = 1.0;
  switch (spec.rule) {
    case StepRule::gk_ak:
      if (spec.b_coef < 0.0) throw ScheduleError("rho_bound: B must be nonnegative");
      if (spec.b_coef == 0.0) {
        bound = b0_bound(r, q, kd, k);
      } else if (spec.b_coef >= 0.5) {
        bound = b_half_bound(r, q, kd, k);
      } else {
        throw UnsupportedParameter("rho_bound: B in (0, 1/2) is not covered by a rate bound");
      }
      break;
    case StepRule::apg: bound = b0_bound(r, q, kd, k); break;
    case StepRule::new_apg: bound = b_half_bound(r, q, kd, k); break;
    case StepRule::nag:
      bound = std::min(squared(std::sqrt(2.0) / (std::sqrt(2.0) + std::sqrt(r) * kd)),
                       linear_branch(2.0 * q, k));
      break;
    case StepRule::apg_fast_grad: {
      // B = 0 with 4L in place of L.
      const double head = 2.0 * b0_head(r / 4.0);
      bound = std::min(squared(head / (head + std::sqrt(r) * kd)), linear_branch(q / 4.0, k));
      break;
    }
    case StepRule::avd: {
      const double sr = std::sqrt(r);
      bound = squared(1.0 + sr / (2.0 + sr)) * squared(2.0 / (2.0 + sr * kd));
      break;
    }
  }
  return std::min(1.0, bound);
}

double momentum_alpha(double mu, double lip, MomentumVariant variant) {
  if (!(mu > 0.0)) throw ScheduleError("momentum_alpha: heavy-ball schemes need mu > 0");
  if (!(lip >= mu)) throw ScheduleError("momentum_alpha: need mu <= L");
  if (variant == MomentumVariant::sqrt) return std::sqrt(mu / lip);
  return (mu + std::sqrt(mu * mu + 4.0 * lip * mu)) / (2.0 * lip);
}

double avd_alpha(double gamma, double lip) {
  if (!(gamma >= 0.0) || !(lip > 0.0)) throw ScheduleError("avd_alpha: need gamma >= 0, L > 0");
  const double sg = std::sqrt(gamma);
  return (sg + std::sqrt(gamma + 4.0 * lip)) / (2.0 * lip);
}

std::vector<ScheduleState> iterate_schedule(const RuleSpec& spec, double gamma0, double mu, double lip,
                                            std::size_t k_max) {
  if (!(gamma0 > 0.0)) throw ScheduleError("iterate_schedule: gamma0 must be positive");
  std::vector<ScheduleState> out;
  out.reserve(k_max + 1);
  ScheduleState st;
  st.gamma = gamma0;
  for (std::size_t k = 0;; ++k) {
    st.k = k;
    st.alpha = rule_alpha(spec, st.gamma, lip);
    st.t_scaled = st.alpha / st.gamma;
    switch (spec.rule) {
      case StepRule::apg:
      case StepRule::nag: st.beta = 1.0 / (lip * st.alpha); break;
      case StepRule::apg_fast_grad: st.beta = 1.0 / (2.0 * lip * st.alpha); break;
      default: st.beta = kNaN; break;
    }
    out.push_back(st);
    if (k == k_max) break;
    st.rho /= 1.0 + rule_contraction_step(spec, st.gamma, st.alpha);
    st.gamma = rule_gamma_next(spec, st.gamma, st.alpha, mu);
  }
  return out;
}

std::vector<RateRow> rate_table(const RuleSpec& spec, double gamma0, double mu, double lip,
                                std::size_t k_max) {
  const auto states = iterate_schedule(spec, gamma0, mu, lip, k_max);
  std::vector<RateRow> rows;
  rows.reserve(states.size());
  for (const auto& st : states) {
    RateRow row;
    row.k = st.k;
    row.rho_measured = st.rho;
    row.rho_bound = rho_bound(spec, gamma0, mu, lip, st.k);
    row.slack = row.rho_bound - row.rho_measured;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace convflow
