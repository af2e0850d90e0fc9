#include "convflow/calculus.hpp"

#include "convflow/rng.hpp"

#include <algorithm>
#include <cmath>

namespace convflow {

DivergencePair bregman(const ProblemOracle& oracle, const Vector& y, const Vector& x) {
  const double hx = oracle.eval_h(x);
  const double hy = oracle.eval_h(y);
  const Vector gx = oracle.grad_h(x);
  const Vector gy = oracle.grad_h(y);
  const Vector diff = y - x;
  DivergencePair out;
  out.d_forward = hy - hx - gx.dot(diff);
  out.d_backward = hx - hy + gy.dot(diff);
  out.m_sym = 0.5 * (gx - gy).dot(x - y);
  return out;
}

double bregman_quadrature(const ProblemOracle& oracle, const Vector& y, const Vector& x, std::size_t panels) {
  if (panels == 0) throw ParameterError("bregman_quadrature: panels must be positive");
  const Vector diff = y - x;
  const Vector gx = oracle.grad_h(x);
  const double h = 1.0 / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t i = 0; i < panels; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * h;
    // 2 M(x_s, x) / s = <grad h(x_s) - grad h(x), y - x>.
    sum += (oracle.grad_h(x + s * diff) - gx).dot(diff);
  }
  return sum * h;
}

void InequalityResult::record(double lhs, double rhs, const Vector& x, const Vector& y) {
  ++checked;
  const double slack = rhs - lhs;
  const double scaled = slack / (1.0 + std::abs(lhs) + std::abs(rhs));
  if (scaled < -kBoundTol) ++violations;
  if (slack < worst_slack) worst_slack = slack;
  if (scaled < worst_scaled_slack) {
    worst_scaled_slack = scaled;
    worst_x = x;
    worst_y = y;
  }
}

std::size_t BoundsReport::violations() const {
  std::size_t n = 0;
  for (const auto& r : inequalities) n += r.violations;
  return n;
}

namespace {

void require_smooth_part(const ProblemOracle& oracle) {
  if (!oracle.eval_h || !oracle.grad_h) throw InvalidProblem("checker needs the smooth part and its gradient");
}

InequalityResult entry(std::string name, bool skipped = false) {
  InequalityResult r;
  r.name = std::move(name);
  r.skipped = skipped;
  return r;
}

}  // namespace

BoundsReport check_bounds_lemma1(const ProblemOracle& oracle, std::size_t samples, std::uint64_t seed,
                                 double radius) {
  require_smooth_part(oracle);
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  BoundsReport report;
  report.check = "divergence_bounds";
  report.problem = oracle.name;
  report.samples = samples;
  report.seed = seed;
  auto dl = entry("DL");
  auto dmu = entry("Dmu");
  auto lower_l = entry("philowerL");
  auto upper_mu = entry("phiuppermu", !(mu > 0.0));

  CounterRng rng(seed, 101);
  for (std::size_t i = 0; i < samples; ++i) {
    const Vector x = rng.uniform_box(oracle.x_star, radius);
    const Vector y = rng.uniform_box(oracle.x_star, radius);
    const DivergencePair d = bregman(oracle, y, x);
    const double dist_sq = (x - y).squaredNorm();
    const double grad_sq = (oracle.grad_h(y) - oracle.grad_h(x)).squaredNorm();
    for (double div : {d.d_forward, d.d_backward, d.m_sym}) {
      dl.record(div, 0.5 * lip * dist_sq, x, y);
      dmu.record(0.5 * mu * dist_sq, div, x, y);
      lower_l.record(grad_sq / (2.0 * lip), div, x, y);
      if (mu > 0.0) upper_mu.record(div, grad_sq / (2.0 * mu), x, y);
    }
  }
  report.inequalities = {dl, dmu, lower_l, upper_mu};
  return report;
}

BoundsReport check_minimum_bounds(const ProblemOracle& oracle, std::size_t samples, std::uint64_t seed,
                                  double radius) {
  require_smooth_part(oracle);
  const double lip = oracle.lip;
  const double mu = oracle.mu;
  const bool smooth = oracle.smooth;
  const bool strong = mu > 0.0;
  BoundsReport report;
  report.check = "minimum";
  report.problem = oracle.name;
  report.samples = samples;
  report.seed = seed;

  auto df2df_lower = entry("Df2df_lower", !smooth);
  auto df2df_upper = entry("Df2df_upper", !smooth);
  auto mf2df_lower = entry("Mf2df_lower", !smooth);
  auto mf2df_upper = entry("Mf2df_upper", !smooth);
  auto optgap_lower = entry("optgapmu_lower", !strong);
  auto optgap_upper = entry("optgapmu_upper", !strong);
  auto mfmu_lower = entry("Mfmu_lower", !strong);
  auto mfmu_upper = entry("Mfmu_upper", !strong);
  auto mxstar = entry("Mxstar");
  auto refine = entry("refineMxstar", !smooth);

  CounterRng rng(seed, 202);
  const Vector& xs = oracle.x_star;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vector w = rng.uniform_box(xs, radius);
    Vector x = w;
    Vector p = oracle.grad_h(w);
    if (!smooth) {
      x = oracle.prox_g(w, 1.0 / lip);
      p = oracle.grad_h(x) + lip * (w - x);
    }
    const double gap = oracle.f_gap(x);
    const double dist_sq = (x - xs).squaredNorm();
    const double p_sq = p.squaredNorm();
    const double pairing = p.dot(x - xs);
    if (smooth) {
      df2df_lower.record(p_sq / (2.0 * lip), gap, x, xs);
      df2df_upper.record(gap, 0.5 * lip * dist_sq, x, xs);
      mf2df_lower.record(p_sq / lip, pairing, x, xs);
      mf2df_upper.record(pairing, lip * dist_sq, x, xs);
      refine.record(mu * lip / (mu + lip) * dist_sq + p_sq / (mu + lip), pairing, x, xs);
    }
    if (strong) {
      optgap_lower.record(0.5 * mu * dist_sq, gap, x, xs);
      optgap_upper.record(gap, p_sq / (2.0 * mu), x, xs);
      mfmu_lower.record(mu * dist_sq, pairing, x, xs);
      mfmu_upper.record(pairing, p_sq / mu, x, xs);
    }
    mxstar.record(gap + 0.5 * mu * dist_sq, pairing, x, xs);
  }
  report.inequalities = {df2df_lower, df2df_upper, mf2df_lower, mf2df_upper, optgap_lower,
                         optgap_upper, mfmu_lower,  mfmu_upper,  mxstar,      refine};
  return report;
}

double three_point_bound(const ProblemOracle& oracle, const Vector& x_k, const Vector& y, const Vector& x_next) {
  const Vector gy = oracle.grad_h(y);
  const double lip = oracle.lip;
  const double cut = std::max(0.5 * oracle.mu * (y - x_k).squaredNorm(),
                              (gy - oracle.grad_h(x_k)).squaredNorm() / (2.0 * lip));
  return gy.dot(x_next - x_k) + 0.5 * lip * (x_next - y).squaredNorm() - cut;
}

}  // namespace convflow
