#include "convflow/problems.hpp"

#include "convflow/rng.hpp"
#include "convflow/solvers.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace convflow {

double log_cosh(double u) {
  const double a = std::abs(u);
  if (a > 20.0) return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
  const double sh = std::sinh(0.5 * a);
  return std::log1p(2.0 * sh * sh);
}

Vector subgradient_residual(const ProblemOracle& oracle, const Vector& w, double s) {
  if (!(s > 0.0)) throw ParameterError("subgradient_residual: s must be positive");
  return (w - oracle.prox_g(w, s)) / s;
}

double gradient_mapping_norm(const ProblemOracle& oracle, const Vector& x) {
  const double lip = oracle.lip;
  const Vector step = oracle.prox_g(x - oracle.grad_h(x) / lip, 1.0 / lip);
  return lip * (x - step).norm();
}

namespace {

void attach_zero_g(ProblemOracle& p) {
  p.eval_g = [](const Vector&) { return 0.0; };
  p.prox_g = [](const Vector& w, double) { return w; };
  p.smooth = true;
}

}  // namespace

ProblemOracle make_quadratic(const Vector& eigs, const Vector& b) {
  if (eigs.size() == 0) throw InvalidProblem("quadratic: eigenvalue list is empty");
  if (b.size() != eigs.size()) throw InvalidProblem("quadratic: b and eigs differ in length");
  if (!eigs.allFinite() || !b.allFinite()) throw InvalidProblem("quadratic: non-finite data");
  if ((eigs.array() <= 0.0).any()) throw InvalidProblem("quadratic: eigenvalues must be positive");

  auto lam = std::make_shared<const Vector>(eigs);
  auto rhs = std::make_shared<const Vector>(b);
  const Vector x_star = b.cwiseQuotient(eigs);

  ProblemOracle p;
  p.name = "quadratic";
  p.dim = eigs.size();
  p.eval_h = [lam, rhs](const Vector& x) {
    return 0.5 * x.dot(lam->cwiseProduct(x)) - rhs->dot(x);
  };
  p.grad_h = [lam, rhs](const Vector& x) -> Vector { return lam->cwiseProduct(x) - *rhs; };
  attach_zero_g(p);
  p.prox_f = [lam, rhs](const Vector& w, double s) -> Vector {
    return (w + s * *rhs).array() / (1.0 + s * lam->array());
  };
  p.gap = [lam, xs = x_star](const Vector& x) {
    const Vector e = x - xs;
    return 0.5 * e.dot(lam->cwiseProduct(e));
  };
  p.mu = eigs.minCoeff();
  p.lip = eigs.maxCoeff();
  p.x_star = x_star;
  p.f_star = -0.5 * b.dot(x_star);
  p.x0 = x_star + Vector::Ones(p.dim);
  return p;
}

ProblemOracle make_conditioned_quadratic(Eigen::Index dim, double mu_over_l, std::uint64_t seed) {
  if (dim < 2) throw InvalidProblem("conditioned quadratic: dim must be at least 2");
  if (!(mu_over_l > 0.0 && mu_over_l <= 1.0)) throw InvalidProblem("conditioned quadratic: ratio must lie in (0, 1]");
  Vector eigs(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(dim - 1);
    eigs[i] = std::pow(mu_over_l, 1.0 - t);
  }
  eigs[0] = mu_over_l;
  eigs[dim - 1] = 1.0;
  CounterRng rng(seed, 11);
  ProblemOracle p = make_quadratic(eigs, rng.normal_vector(dim));
  p.name = "conditioned_quadratic";
  return p;
}

namespace {

double power_lambda_max(const Matrix& gram) {
  Vector v = Vector::Ones(gram.rows()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 1000000; ++it) {
    const Vector w = gram * v;
    lambda = v.dot(w);
    if (!(lambda > 0.0)) return 0.0;
    if ((w - lambda * v).norm() <= 1e-10 * lambda) break;
    v = w.normalized();
  }
  return lambda;
}

// Accepts x* when the sign pattern of x solves the optimality system exactly on its support.
std::optional<Vector> polish_support(const Matrix& a, const Vector& b, double rho, const Vector& x) {
  const double scale = x.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) {
    const Vector corr = a.transpose() * b;
    if (corr.cwiseAbs().maxCoeff() <= rho) return Vector::Zero(x.size());
    return std::nullopt;
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > 1e-9 * scale) support.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(support.size());
  if (m > a.rows()) return std::nullopt;
  Matrix as(a.rows(), m);
  Vector signs(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    as.col(j) = a.col(support[j]);
    signs[j] = x[support[j]] > 0.0 ? 1.0 : -1.0;
  }
  const Matrix gram = as.transpose() * as;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  const Vector z = ldlt.solve(as.transpose() * b - rho * signs);
  if (!z.allFinite()) return std::nullopt;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (z[j] * signs[j] <= 0.0) return std::nullopt;
  }
  Vector full = Vector::Zero(x.size());
  for (Eigen::Index j = 0; j < m; ++j) full[support[j]] = z[j];
  const Vector corr = a.transpose() * (a * full - b);
  const double slack = 1e-10 * (1.0 + rho);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (full[i] == 0.0 && std::abs(corr[i]) > rho + slack) return std::nullopt;
    if (full[i] != 0.0 && std::abs(corr[i] + rho * (full[i] > 0.0 ? 1.0 : -1.0)) > slack * (1.0 + corr.norm()))
      return std::nullopt;
  }
  return full;
}

Vector lasso_reference(const ProblemOracle& oracle, const Matrix& a, const Vector& b, double rho) {
  SolverParams params;
  params.kind = SolverKind::apg;
  SolverState state = initial_state(oracle, params, Vector::Zero(oracle.dim));
  const double stop = 1e-12 * std::max(1.0, (a.transpose() * b).norm());
  constexpr std::size_t kMaxIters = 200000;
  for (std::size_t k = 1; k <= kMaxIters; ++k) {
    state = step_apg(oracle, state);
    if (k % 50 == 0) {
      if (auto polished = polish_support(a, b, rho, state.x)) return *polished;
    }
    if (gradient_mapping_norm(oracle, state.x) < stop) break;
  }
  if (auto polished = polish_support(a, b, rho, state.x)) return *polished;
  spdlog::debug("lasso reference: support polish not accepted; keeping the APG iterate");
  return state.x;
}

}  // namespace

ProblemOracle make_lasso(const Matrix& a, const Vector& b, double rho) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidProblem("lasso: empty design matrix");
  if (b.size() != a.rows()) throw InvalidProblem("lasso: b length does not match the rows of A");
  if (!(rho > 0.0)) throw InvalidProblem("lasso: rho must be positive");
  if (!a.allFinite() || !b.allFinite()) throw InvalidProblem("lasso: non-finite data");

  auto mat = std::make_shared<const Matrix>(a);
  auto rhs = std::make_shared<const Vector>(b);
  const Matrix gram = a.transpose() * a;

  ProblemOracle p;
  p.name = "lasso";
  p.dim = a.cols();
  p.smooth = false;
  p.eval_h = [mat, rhs](const Vector& x) { return 0.5 * (*mat * x - *rhs).squaredNorm(); };
  p.grad_h = [mat, rhs](const Vector& x) -> Vector { return mat->transpose() * (*mat * x - *rhs); };
  p.eval_g = [rho](const Vector& x) { return rho * x.lpNorm<1>(); };
  p.prox_g = [rho](const Vector& w, double s) -> Vector {
    const double t = s * rho;
    return w.unaryExpr([t](double wi) { return std::copysign(std::max(std::abs(wi) - t, 0.0), wi); });
  };
  p.lip = power_lambda_max(gram);
  if (!(p.lip > 0.0)) throw InvalidProblem("lasso: A must be nonzero");
  if (a.rows() >= a.cols()) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    p.mu = std::clamp(eig.eigenvalues().minCoeff(), 0.0, p.lip);
  }
  p.x0 = Vector::Zero(p.dim);
  p.x_star = lasso_reference(p, a, b, rho);
  p.f_star = p.eval_f(p.x_star);
  // rho |x|_1 <= f(x) <= f(x0) on the sublevel set.
  p.radius_r0 = p.level() / rho + p.x_star.norm();
  return p;
}

ProblemOracle make_random_lasso(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double rho_fraction) {
  if (rows <= 0 || cols <= 0) throw InvalidProblem("lasso: dimensions must be positive");
  if (!(rho_fraction > 0.0)) throw InvalidProblem("lasso: rho_fraction must be positive");
  CounterRng rng(seed, 7);
  Matrix a(rows, cols);
  const double sd = 1.0 / std::sqrt(static_cast<double>(rows));
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = sd * rng.normal();
  Vector x_true = Vector::Zero(cols);
  const Eigen::Index nnz = std::min<Eigen::Index>(5, cols);
  for (Eigen::Index placed = 0; placed < nnz;) {
    const auto idx = static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(cols));
    if (x_true[idx] != 0.0) continue;
    double value = rng.normal();
    if (value == 0.0) value = 1.0;
    x_true[idx] = value;
    ++placed;
  }
  const Vector b = a * x_true + 0.01 * rng.normal_vector(rows);
  const double rho = rho_fraction * (a.transpose() * b).cwiseAbs().maxCoeff();
  ProblemOracle p = make_lasso(a, b, rho);
  p.name = "lasso_" + std::to_string(rows) + "x" + std::to_string(cols);
  return p;
}

namespace {

double logcosh_radius(double scale, double gap) {
  if (!(gap > 0.0)) return 0.0;
  double lo = 0.0;
  double hi = (gap + std::numbers::ln2) / scale;
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (log_cosh(scale * mid) <= gap ? lo : hi) = mid;
  }
  return hi;
}

// argmin_z t * log cosh(s z) + (z - w)^2 / 2 for one coordinate.
double logcosh_prox_scalar(double w, double t, double s) {
  const double aw = std::abs(w);
  double z = aw / (1.0 + t * s * s);
  for (int it = 0; it < 100; ++it) {
    const double th = std::tanh(s * z);
    const double phi = z + t * s * th - aw;
    const double dphi = 1.0 + t * s * s * (1.0 - th * th);
    const double next = z - phi / dphi;
    if (!(next > z)) break;
    z = next;
  }
  return std::copysign(z, w);
}

}  // namespace

ProblemOracle make_logcosh(double scale, const Vector& x0) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidProblem("logcosh: scale must be positive");
  if (x0.size() == 0) throw InvalidProblem("logcosh: x0 must be nonempty");
  if (!x0.allFinite()) throw InvalidProblem("logcosh: non-finite x0");

  const auto n = static_cast<double>(x0.size());
  auto gap = [scale](const Vector& x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) sum += log_cosh(scale * x[i]);
    return sum;
  };

  ProblemOracle p;
  p.name = "logcosh";
  p.dim = x0.size();
  p.eval_h = [gap, n](const Vector& x) { return gap(x) + n * std::numbers::ln2; };
  p.grad_h = [scale](const Vector& x) -> Vector {
    return x.unaryExpr([scale](double xi) { return scale * std::tanh(scale * xi); });
  };
  attach_zero_g(p);
  p.prox_f = [scale](const Vector& w, double t) -> Vector {
    return w.unaryExpr([t, scale](double wi) { return logcosh_prox_scalar(wi, t, scale); });
  };
  p.gap = gap;
  p.mu = 0.0;
  p.lip = scale * scale;
  p.x_star = Vector::Zero(p.dim);
  p.f_star = n * std::numbers::ln2;
  p.x0 = x0;
  p.radius_r0 = logcosh_radius(scale, gap(x0));
  return p;
}

std::vector<ProblemOracle> builtin_problems() {
  std::vector<ProblemOracle> out;
  auto named = [&out](ProblemOracle p, std::string name) {
    p.name = std::move(name);
    out.push_back(std::move(p));
  };
  named(make_quadratic(Vector{{1.0, 10.0}}, Vector{{1.0, -1.0}}), "quadratic_1_10");
  named(make_quadratic(Vector{{1.0, 100.0}}, Vector{{1.0, -2.0}}), "quadratic_1_100");
  named(make_conditioned_quadratic(20, 1e-4, 0), "quadratic_cond_1e-4");
  named(make_logcosh(1.0, Vector{{2.0, -1.0, 0.5}}), "logcosh_s1");
  named(make_logcosh(3.0, Vector{{0.3, -0.2}}), "logcosh_s3");
  named(make_random_lasso(20, 50, 1), "lasso_20x50");
  named(make_random_lasso(50, 100, 2), "lasso_50x100");
  named(make_random_lasso(40, 10, 3), "lasso_40x10");
  return out;
}

}  // namespace convflow
