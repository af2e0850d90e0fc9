#include "convflow/lyapunov.hpp"

#include "convflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace convflow {

std::string_view to_string(LyapunovKind kind) {
  switch (kind) {
    case LyapunovKind::opt_gap: return "opt_gap";
    case LyapunovKind::dist_sq: return "dist_sq";
    case LyapunovKind::combined_mu: return "combined_mu";
    case LyapunovKind::scaled: return "scaled";
    case LyapunovKind::hb: return "hb";
    case LyapunovKind::avd_nag: return "avd_nag";
  }
  return "unknown";
}

LyapunovKind parse_lyapunov_kind(std::string_view name) {
  for (auto kind : {LyapunovKind::opt_gap, LyapunovKind::dist_sq, LyapunovKind::combined_mu,
                    LyapunovKind::scaled, LyapunovKind::hb, LyapunovKind::avd_nag}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown Lyapunov function '" + std::string(name) + "'");
}

bool needs_v(LyapunovKind kind) { return kind == LyapunovKind::hb || kind == LyapunovKind::avd_nag; }

bool needs_gamma(LyapunovKind kind) {
  return kind == LyapunovKind::scaled || kind == LyapunovKind::avd_nag;
}

namespace {

void require_blocks(LyapunovKind kind, const FlowState& state) {
  if (needs_v(kind) && !state.v)
    throw ConfigError(std::string(to_string(kind)) + " Lyapunov function needs a v block");
  if (needs_gamma(kind) && !state.gamma)
    throw ConfigError(std::string(to_string(kind)) + " Lyapunov function needs a gamma block");
}

}  // namespace

double evaluate(LyapunovKind kind, const ProblemOracle& oracle, const FlowState& state) {
  require_blocks(kind, state);
  const Vector& x = state.x;
  switch (kind) {
    case LyapunovKind::opt_gap: return oracle.f_gap(x);
    case LyapunovKind::dist_sq: return 0.5 * (x - oracle.x_star).squaredNorm();
    case LyapunovKind::combined_mu:
      return oracle.f_gap(x) + 0.5 * oracle.mu * (x - oracle.x_star).squaredNorm();
    case LyapunovKind::scaled:
      return oracle.f_gap(x) + 0.5 * *state.gamma * (x - oracle.x_star).squaredNorm();
    case LyapunovKind::hb:
      return oracle.f_gap(x) + 0.5 * oracle.mu * (*state.v - oracle.x_star).squaredNorm();
    case LyapunovKind::avd_nag:
      return oracle.f_gap(x) + 0.5 * *state.gamma * (*state.v - oracle.x_star).squaredNorm();
  }
  return kNaN;
}

LyapunovGradient gradient(LyapunovKind kind, const ProblemOracle& oracle, const FlowState& state) {
  require_blocks(kind, state);
  if (!oracle.smooth) throw ConfigError("Lyapunov gradient needs a smooth objective");
  const Vector& x = state.x;
  LyapunovGradient g;
  switch (kind) {
    case LyapunovKind::opt_gap: g.x = oracle.grad_h(x); break;
    case LyapunovKind::dist_sq: g.x = x - oracle.x_star; break;
    case LyapunovKind::combined_mu: g.x = oracle.grad_h(x) + oracle.mu * (x - oracle.x_star); break;
    case LyapunovKind::scaled:
      g.x = oracle.grad_h(x) + *state.gamma * (x - oracle.x_star);
      g.gamma = 0.5 * (x - oracle.x_star).squaredNorm();
      break;
    case LyapunovKind::hb:
      g.x = oracle.grad_h(x);
      g.v = oracle.mu * (*state.v - oracle.x_star);
      break;
    case LyapunovKind::avd_nag:
      g.x = oracle.grad_h(x);
      g.v = *state.gamma * (*state.v - oracle.x_star);
      g.gamma = 0.5 * (*state.v - oracle.x_star).squaredNorm();
      break;
  }
  return g;
}

namespace {

double alpha_at(const DecayParams& params, std::size_t i) {
  if (params.alphas.empty()) return params.alpha;
  if (i >= params.alphas.size()) throw ParameterError("sequence_decay: alpha sequence too short");
  return params.alphas[i];
}

void validate(int which, double a0, const DecayParams& params, std::size_t k) {
  if (which < 1 || which > 4) throw ParameterError("sequence_decay: case must be 1, 2, 3 or 4");
  if (!(a0 > 0.0)) throw ParameterError("sequence_decay: A0 must be positive");
  if (which <= 2) {
    for (std::size_t i = 0; i < k; ++i) {
      const double a = alpha_at(params, i);
      if (!(a >= 0.0)) throw ParameterError("sequence_decay: alpha_k must be nonnegative");
      if (which == 1 && !(a < 1.0)) throw ParameterError("sequence_decay: case 1 needs alpha_k in [0, 1)");
    }
  } else if (!(params.alpha > 0.0)) {
    throw ParameterError("sequence_decay: cases 3-4 need alpha > 0");
  }
}

}  // namespace

double sequence_decay(int which, double a0, const DecayParams& params, std::size_t k) {
  validate(which, a0, params, k);
  const double kd = static_cast<double>(k);
  switch (which) {
    case 1: {
      double bound = a0;
      for (std::size_t i = 0; i < k; ++i) bound *= 1.0 - alpha_at(params, i);
      return bound;
    }
    case 2: {
      double bound = a0;
      for (std::size_t i = 0; i < k; ++i) bound /= 1.0 + alpha_at(params, i);
      return bound;
    }
    case 3: return a0 / (1.0 + params.alpha * a0 * kd);
    default: {
      const double aa0 = params.alpha * a0;
      const double delta = aa0 / (1.0 + aa0);
      return (1.0 + delta) * a0 / (1.0 + aa0 * kd);
    }
  }
}

namespace {

// Largest admissible A_{k+1} given A_k (equality in the recursion with p = 0).
double extremal_next(int which, double a, double alpha_k, double alpha) {
  switch (which) {
    case 1: return (1.0 - alpha_k) * a;
    case 2: return a / (1.0 + alpha_k);
    case 3: return a - alpha * a * a;
    default:
      // Positive root of alpha A^2 + A - a = 0 in cancellation-free form.
      return 2.0 * a / (1.0 + std::sqrt(1.0 + 4.0 * alpha * a));
  }
}

}  // namespace

DecayOracleReport sequence_decay_oracle(int which, double a0, const DecayParams& params, std::size_t k_max,
                                        std::uint64_t seed, std::size_t random_sequences) {
  validate(which, a0, params, k_max);
  DecayOracleReport report;
  report.which = which;
  report.k_max = k_max;

  std::vector<double> bounds(k_max + 1);
  {
    // Incremental products match sequence_decay(which, a0, params, k) without O(k^2) work.
    double running = a0;
    for (std::size_t k = 0; k <= k_max; ++k) {
      if (which == 1 || which == 2) {
        bounds[k] = running;
        if (k < k_max) {
          const double a = alpha_at(params, k);
          running = which == 1 ? running * (1.0 - a) : running / (1.0 + a);
        }
      } else {
        bounds[k] = sequence_decay(which, a0, params, k);
      }
    }
  }

  constexpr double kRelTol = 1e-12;
  CounterRng rng(seed, static_cast<std::uint64_t>(which));
  for (std::size_t s = 0; s <= random_sequences; ++s) {
    const bool extremal = s == 0;
    double a = a0;
    double rho = 1.0;
    double p_sum = 0.0;
    for (std::size_t k = 0; k <= k_max; ++k) {
      const double ratio = a / bounds[k];
      report.worst_ratio = std::max(report.worst_ratio, ratio);
      if (a > bounds[k] * (1.0 + kRelTol)) ++report.violations;
      if (k == k_max) break;
      const double alpha_k = which <= 2 ? alpha_at(params, k) : 0.0;
      const double top = extremal_next(which, a, alpha_k, params.alpha);
      // The extremal step for case 3 can leave the positive cone; positivity ends the sequence.
      if (!(top > 0.0)) break;
      double next = top;
      if (!extremal) {
        const double u = rng.uniform();
        next = u < 0.7 ? top : top * rng.uniform(0.5, 1.0);
      }
      if (which == 1 || which == 2) {
        rho = which == 1 ? rho * (1.0 - alpha_k) : rho / (1.0 + alpha_k);
        // Removed mass p^2 = top - next (case 1) or (1 + a_k)(top - next) (case 2).
        const double p_sq = which == 1 ? top - next : (1.0 + alpha_k) * (top - next);
        p_sum += p_sq / (which == 1 ? rho : rho * (1.0 + alpha_k));
      }
      a = next;
    }
    report.max_p_sum = std::max(report.max_p_sum, p_sum);
    ++report.sequences;
  }
  report.passed = report.violations == 0 && std::isfinite(report.max_p_sum);
  return report;
}

}  // namespace convflow
