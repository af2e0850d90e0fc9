#pragma once

#include "convflow/problems.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace convflow {

struct DivergencePair {
  double d_forward = 0.0;   // D_h(y, x)
  double d_backward = 0.0;  // D_h(x, y)
  double m_sym = 0.0;       // (1/2) <grad h(x) - grad h(y), x - y>
};

// Divergences of the smooth part h.
DivergencePair bregman(const ProblemOracle& oracle, const Vector& y, const Vector& x);

// D_h(y, x) from the integral of 2 M(x + s (y - x), x) / s over (0, 1), midpoint rule.
double bregman_quadrature(const ProblemOracle& oracle, const Vector& y, const Vector& x, std::size_t panels);

// slack = rhs - lhs of an inequality lhs <= rhs; a sample violates when
// slack < -kBoundTol (1 + |lhs| + |rhs|).
inline constexpr double kBoundTol = 1e-9;

struct InequalityResult {
  std::string name;
  bool skipped = false;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_slack = kInf;
  double worst_scaled_slack = kInf;
  Vector worst_x;
  Vector worst_y;

  void record(double lhs, double rhs, const Vector& x, const Vector& y);
};

struct BoundsReport {
  std::string check;
  std::string problem;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<InequalityResult> inequalities;

  std::size_t violations() const;
  bool passed() const { return violations() == 0; }
};

// Pairs (x, y) uniform in the box of radius `radius` around x_star.
BoundsReport check_bounds_lemma1(const ProblemOracle& oracle, std::size_t samples, std::uint64_t seed,
                                 double radius = 10.0);

// Bounds at the minimizer. Smooth oracles use grad h; composite oracles use the
// subgradient p = grad h(x) + L (w - x) at x = prox_g(w, 1/L).
BoundsReport check_minimum_bounds(const ProblemOracle& oracle, std::size_t samples, std::uint64_t seed,
                                  double radius = 10.0);

// <grad h(y), x_next - x_k> + L/2 |x_next - y|^2 - max{mu/2 |y - x_k|^2, |grad h(y) - grad h(x_k)|^2 / (2L)}.
double three_point_bound(const ProblemOracle& oracle, const Vector& x_k, const Vector& y, const Vector& x_next);

}  // namespace convflow
