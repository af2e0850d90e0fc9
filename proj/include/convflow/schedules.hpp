#pragma once

#include "convflow/types.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace convflow {

// gamma_{k+1} = (gamma_k + alpha_k mu) / (1 + alpha_k).
double gamma_step(double gamma, double alpha, double mu);

// Closed form of the gamma recursion in terms of t_i = alpha_i / gamma_i.
double gamma_closed_form(double gamma0, double mu, std::span<const double> t_seq);

// Positive root of L a^2 = gamma (1 + B a).
double solve_alpha_quadratic(double gamma, double lip, double b_coef);

enum class StepRule {
  gk_ak,          // L a^2 = gamma (1 + B a), B from RuleSpec::b_coef
  apg,            // a = sqrt(gamma / L)
  apg_fast_grad,  // a = sqrt(gamma / (4L))
  new_apg,        // L a^2 = gamma (1 + a)
  nag,            // L a^2 = gamma (2 + a)
  avd,            // L a^2 = 1 + a sqrt(gamma), gamma_{k+1} = gamma_k / (1 + a sqrt(gamma_k))
};

struct RuleSpec {
  StepRule rule = StepRule::apg;
  double b_coef = 0.0;
};

RuleSpec parse_rule(std::string_view name, double b_coef = 0.0);
std::string to_string(const RuleSpec& spec);

double rule_alpha(const RuleSpec& spec, double gamma, double lip);
double rule_gamma_next(const RuleSpec& spec, double gamma, double alpha, double mu);
// Per-step contraction 1/(1 + rate_step) attached to the rule (alpha, or alpha sqrt(gamma) for avd).
double rule_contraction_step(const RuleSpec& spec, double gamma, double alpha);

// Closed-form min{sublinear, linear} bound on rho_k for the rule, with r = gamma0 / L.
double rho_bound(const RuleSpec& spec, double gamma0, double mu, double lip, std::size_t k);

enum class MomentumVariant { sqrt, root };
double momentum_alpha(double mu, double lip, MomentumVariant variant);

double avd_alpha(double gamma, double lip);

struct ScheduleState {
  std::size_t k = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double rho = 1.0;
  double t_scaled = 0.0;
  double beta = kNaN;
};

// States 0..k_max of the rule's schedule; rho is the running product of contractions.
std::vector<ScheduleState> iterate_schedule(const RuleSpec& spec, double gamma0, double mu, double lip,
                                            std::size_t k_max);

struct RateRow {
  std::size_t k = 0;
  double rho_measured = 1.0;
  double rho_bound = 1.0;
  double slack = 0.0;
};

std::vector<RateRow> rate_table(const RuleSpec& spec, double gamma0, double mu, double lip,
                                std::size_t k_max);

}  // namespace convflow
