#pragma once

#include "convflow/problems.hpp"
#include "convflow/state.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace convflow {

enum class LyapunovKind {
  opt_gap,      // f - f*
  dist_sq,      // |x - x*|^2 / 2
  combined_mu,  // f - f* + mu/2 |x - x*|^2
  scaled,       // f - f* + gamma/2 |x - x*|^2
  hb,           // f - f* + mu/2 |v - x*|^2
  avd_nag,      // f - f* + gamma/2 |v - x*|^2
};

std::string_view to_string(LyapunovKind kind);
LyapunovKind parse_lyapunov_kind(std::string_view name);
bool needs_v(LyapunovKind kind);
bool needs_gamma(LyapunovKind kind);

// Block gradients; v is empty and gamma zero when the kind does not use them.
struct LyapunovGradient {
  Vector x;
  Vector v;
  double gamma = 0.0;
};

double evaluate(LyapunovKind kind, const ProblemOracle& oracle, const FlowState& state);

// Requires smooth f (uses grad_h).
LyapunovGradient gradient(LyapunovKind kind, const ProblemOracle& oracle, const FlowState& state);

// Discrete decay theorem for positive sequences, cases 1-4:
//   1: A+ - A <= -a_k A - p^2        -> prod (1 - a_i) A0
//   2: A+ - A <= -a_k A+ - p^2       -> prod 1/(1 + a_i) A0
//   3: A+ - A <= -a A^2              -> A0 / (1 + a A0 k)
//   4: A+ - A <= -a A+^2             -> (1 + d) A0 / (1 + a A0 k),  d = a A0 / (1 + a A0)
struct DecayParams {
  std::vector<double> alphas;  // cases 1-2; empty means constant `alpha`
  double alpha = 0.0;
};

double sequence_decay(int which, double a0, const DecayParams& params, std::size_t k);

struct DecayOracleReport {
  int which = 0;
  std::size_t k_max = 0;
  std::size_t sequences = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max over sequences and k of A_k / bound_k
  double max_p_sum = 0.0;    // max of sum_i p_i^2 / rho_{i+1} over random sequences (cases 1-2)
  bool passed = false;
};

// Extremal sequence (equality, p = 0) plus `random_sequences` random admissible ones.
DecayOracleReport sequence_decay_oracle(int which, double a0, const DecayParams& params, std::size_t k_max,
                                        std::uint64_t seed = 0, std::size_t random_sequences = 100);

}  // namespace convflow
