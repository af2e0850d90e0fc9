#pragma once

#include "convflow/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace convflow {

// Composite objective f = h + g with h in S^1_{mu,L} and g convex (possibly zero).
// Immutable once built; the callables share their data, so copies are cheap.
struct ProblemOracle {
  std::string name;
  Eigen::Index dim = 0;

  std::function<double(const Vector&)> eval_h;
  std::function<Vector(const Vector&)> grad_h;
  std::function<double(const Vector&)> eval_g;
  std::function<Vector(const Vector&, double)> prox_g;
  std::function<Vector(const Vector&, double)> prox_f;  // empty when no closed form
  // f(x) - f_star, evaluated without cancellation where the family allows it.
  std::function<double(const Vector&)> gap;

  double mu = 0.0;
  double lip = 1.0;
  Vector x_star;
  double f_star = 0.0;

  // Default starting point; radius_r0 bounds ||x - x_star|| over {f <= f(x0)}.
  Vector x0;
  std::optional<double> radius_r0;

  bool smooth = true;  // g == 0

  double eval_f(const Vector& x) const { return eval_h(x) + eval_g(x); }
  double f_gap(const Vector& x) const { return gap ? gap(x) : eval_f(x) - f_star; }
  double level() const { return eval_f(x0); }
  bool has_prox_f() const { return static_cast<bool>(prox_f); }
};

ProblemOracle make_quadratic(const Vector& eigs, const Vector& b);

// Eigenvalues log-spaced on [mu_over_l, 1]; b standard normal from the seed.
ProblemOracle make_conditioned_quadratic(Eigen::Index dim, double mu_over_l, std::uint64_t seed);

ProblemOracle make_lasso(const Matrix& a, const Vector& b, double rho);

// Gaussian design with entries N(0, 1/rows); rho = rho_fraction * ||A^T b||_inf.
ProblemOracle make_random_lasso(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                double rho_fraction = 0.1);

// f(x) = sum_i log(exp(scale x_i) + exp(-scale x_i)); dim taken from x0.
ProblemOracle make_logcosh(double scale, const Vector& x0);

// q = (w - prox_g(w, s)) / s, a subgradient of g at prox_g(w, s).
Vector subgradient_residual(const ProblemOracle& oracle, const Vector& w, double s);

// ||L (x - prox_g(x - grad_h(x)/L, 1/L))||; equals ||grad f(x)|| for smooth f.
double gradient_mapping_norm(const ProblemOracle& oracle, const Vector& x);

// log(cosh(u)) accurate for small |u| and overflow-free for large |u|.
double log_cosh(double u);

// The problem set every checker runs over.
std::vector<ProblemOracle> builtin_problems();

}  // namespace convflow
