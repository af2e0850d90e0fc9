#include "convflow/rng.hpp"
#include "convflow/schedules.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace convflow;

TEST_CASE("gamma_step examples and validation") {
  CHECK(gamma_step(1.0, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(gamma_step(0.7, 3.2, 0.7) == doctest::Approx(0.7));
  CHECK(gamma_step(2.0, 0.5, 1.0) == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(gamma_step(0.0, 1.0, 0.0), ScheduleError);
  CHECK_THROWS_AS(gamma_step(1.0, 0.0, 0.0), ScheduleError);
  CHECK_THROWS_AS(gamma_step(1.0, 1.0, -1.0), ScheduleError);
}

TEST_CASE("gamma_closed_form examples") {
  const std::vector<double> two_ones{1.0, 1.0};
  CHECK(gamma_closed_form(1.0, 0.0, two_ones) == doctest::Approx(1.0 / 3.0));
  CHECK(gamma_closed_form(1.0, 1.0, std::vector<double>{0.3, 2.0, 7.0}) == doctest::Approx(1.0));
  CHECK(gamma_closed_form(2.0, 0.5, std::vector<double>{1.0}) == doctest::Approx(1.0));
  CHECK(gamma_step(2.0, 2.0, 0.5) == doctest::Approx(1.0));
  CHECK(gamma_closed_form(3.0, 0.2, std::vector<double>{}) == 3.0);
}

TEST_CASE("gamma_closed_form agrees with the recursion") {
  CounterRng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const double gamma0 = rng.uniform(0.01, 10.0);
    const double mu = trial % 5 == 0 ? 0.0 : rng.uniform(0.0, 5.0);
    double gamma = gamma0;
    std::vector<double> ts;
    for (int k = 0; k < 50; ++k) {
      const double alpha = rng.uniform(0.01, 3.0);
      ts.push_back(alpha / gamma);
      gamma = gamma_step(gamma, alpha, mu);
    }
    CHECK(gamma_closed_form(gamma0, mu, ts) == doctest::Approx(gamma).epsilon(1e-12));
  }
}

TEST_CASE("solve_alpha_quadratic examples") {
  CHECK(solve_alpha_quadratic(3.0, 3.0, 0.0) == doctest::Approx(1.0));
  CHECK(solve_alpha_quadratic(3.0, 3.0, 1.0) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0));
  CHECK(solve_alpha_quadratic(3.0, 3.0, 2.0) == doctest::Approx(1.0 + std::sqrt(2.0)));
  // Tiny gamma: the root stays accurate.
  const double a = solve_alpha_quadratic(1e-20, 1.0, 1.0);
  CHECK(a * a == doctest::Approx(1e-20 * (1.0 + a)).epsilon(1e-14));
  CHECK_THROWS_AS(solve_alpha_quadratic(0.0, 1.0, 0.0), ScheduleError);
}

TEST_CASE("named rules satisfy their defining equations") {
  const double lip = 3.0;
  for (double gamma : {1e-6, 0.1, 1.0, 3.0, 50.0}) {
    const double a_apg = rule_alpha(parse_rule("apg"), gamma, lip);
    CHECK(lip * a_apg * a_apg == doctest::Approx(gamma));
    const double a_fg = rule_alpha(parse_rule("apg_fast_grad"), gamma, lip);
    CHECK(4.0 * lip * a_fg * a_fg == doctest::Approx(gamma));
    const double a_new = rule_alpha(parse_rule("new_apg"), gamma, lip);
    CHECK(lip * a_new * a_new == doctest::Approx(gamma * (1.0 + a_new)));
    const double a_nag = rule_alpha(parse_rule("nag"), gamma, lip);
    CHECK(lip * a_nag * a_nag == doctest::Approx(gamma * (2.0 + a_nag)));
    const double a_avd = rule_alpha(parse_rule("avd"), gamma, lip);
    CHECK(lip * a_avd * a_avd == doctest::Approx(1.0 + a_avd * std::sqrt(gamma)));
  }
  CHECK_THROWS_AS(parse_rule("heavy"), ScheduleError);
}

TEST_CASE("rho_bound examples") {
  CHECK(rho_bound(parse_rule("b0"), 1.0, 0.0, 1.0, 0) == 1.0);
  for (std::size_t k : {1, 2, 5, 40}) {
    const double kd = static_cast<double>(k);
    CHECK(rho_bound(parse_rule("new_apg"), 1.0, 0.0, 1.0, k) == doctest::Approx(std::pow(2.0 / (2.0 + kd), 2)));
    const double s2 = std::sqrt(2.0);
    CHECK(rho_bound(parse_rule("b0"), 1.0, 0.0, 1.0, k) == doctest::Approx(std::pow((s2 + 1.0) / (s2 + 1.0 + kd), 2)));
    const double linear = std::pow(1.0 + s2, -kd);
    const double nag = rho_bound(parse_rule("nag"), 1.0, 1.0, 1.0, k);
    CHECK(nag <= linear * (1.0 + 1e-15));
    if (k >= 5) CHECK(nag == doctest::Approx(linear));
  }
  for (const char* rule : {"apg", "new_apg", "nag", "apg_fast_grad", "avd"})
    CHECK(rho_bound(parse_rule(rule), 2.0, 0.3, 1.0, 0) == 1.0);
}

TEST_CASE("B = 0 sublinear head below r = 1") {
  // One step from gamma0 = L/4, mu = 0: alpha0 = 1/2, rho1 = 2/3 exactly.
  const double r = 0.25;
  const double head = 1.0 + std::sqrt(1.0 + std::sqrt(r));
  CHECK(rho_bound(parse_rule("apg"), r, 0.0, 1.0, 1) == doctest::Approx(std::pow(head / (head + 0.5), 2)));
  CHECK(rho_bound(parse_rule("apg"), r, 0.0, 1.0, 1) >= 2.0 / 3.0);
  const auto rows = rate_table(parse_rule("apg"), r, 0.0, 1.0, 1);
  CHECK(rows.back().rho_measured == doctest::Approx(2.0 / 3.0));
  // The head sqrt(r + 1) + 1 would give a value below the measured 2/3.
  const double loose = std::sqrt(r + 1.0) + 1.0;
  CHECK(std::pow(loose / (loose + 0.5), 2) < 2.0 / 3.0);
}

TEST_CASE("rho_bound errors") {
  CHECK_THROWS_AS(rho_bound(parse_rule("apg"), 0.5, 1.0, 2.0, 3), ScheduleError);
  CHECK_THROWS_AS(rho_bound(parse_rule("gk_ak", 0.25), 1.0, 0.0, 1.0, 3), UnsupportedParameter);
  CHECK_NOTHROW(rho_bound(parse_rule("gk_ak", 0.5), 1.0, 0.0, 1.0, 3));
  CHECK_NOTHROW(rho_bound(parse_rule("gk_ak", 3.0), 1.0, 0.0, 1.0, 3));
}

TEST_CASE("measured contraction products stay below the closed-form bounds") {
  for (const char* name : {"apg", "new_apg", "nag", "apg_fast_grad", "avd"}) {
    for (double r : {0.25, 1.0, 4.0}) {
      for (double q : {0.0, 1e-4, 1e-2, 1.0}) {
        if (r < q) continue;
        CAPTURE(name);
        CAPTURE(r);
        CAPTURE(q);
        const auto rows = rate_table(parse_rule(name), r, q, 1.0, 10000);
        double worst = kInf;
        // Both columns underflow together on the linear branch; 1e-300 absorbs subnormal rounding.
        for (const auto& row : rows)
          worst = std::min(worst, row.rho_bound * (1.0 + 1e-12) + 1e-300 - row.rho_measured);
        CHECK(worst >= 0.0);
        CHECK(rows.front().rho_measured == 1.0);
      }
    }
  }
  for (double b : {0.0, 0.5, 1.0, 2.0}) {
    const auto rows = rate_table(parse_rule("gk_ak", b), 1.0, 1e-3, 1.0, 10000);
    for (const auto& row : rows) CHECK(row.rho_measured <= row.rho_bound * (1.0 + 1e-12));
  }
}

TEST_CASE("schedule invariants") {
  for (double gamma0 : {0.05, 1.0, 7.0}) {
    for (double mu : {0.0, 0.05, 1.0}) {
      if (gamma0 < mu) continue;
      const auto states = iterate_schedule(parse_rule("new_apg"), gamma0, mu, 1.0, 2000);
      for (std::size_t k = 1; k < states.size(); ++k) {
        const auto& prev = states[k - 1];
        const auto& cur = states[k];
        CHECK(cur.gamma > 0.0);
        CHECK(cur.gamma >= std::min(gamma0, mu) * (1.0 - 1e-15));
        CHECK(cur.gamma <= std::max(gamma0, mu) * (1.0 + 1e-15));
        CHECK(cur.rho <= prev.rho);
        CHECK(cur.rho <= cur.gamma / gamma0 + 1e-15);
        if (gamma0 > mu) CHECK(cur.gamma <= prev.gamma);
        if (gamma0 == mu) CHECK(cur.gamma == doctest::Approx(mu));
      }
    }
  }
  // gamma0 < mu: increasing toward mu.
  const auto up = iterate_schedule(parse_rule("apg"), 0.01, 0.5, 1.0, 100);
  for (std::size_t k = 1; k < up.size(); ++k) CHECK(up[k].gamma >= up[k - 1].gamma);
}

TEST_CASE("momentum and avd step sizes") {
  CHECK(momentum_alpha(2.0, 2.0, MomentumVariant::sqrt) == doctest::Approx(1.0));
  CHECK(momentum_alpha(2.0, 2.0, MomentumVariant::root) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0));
  const double a = momentum_alpha(0.01, 1.0, MomentumVariant::sqrt);
  CHECK(a == doctest::Approx(0.1));
  CHECK(1.0 * a * a <= 0.01 * (1.0 + a));
  const double b = momentum_alpha(0.01, 1.0, MomentumVariant::root);
  CHECK(1.0 * b * b <= 0.01 * (1.0 + b) * (1.0 + 1e-12));
  CHECK_THROWS_AS(momentum_alpha(0.0, 1.0, MomentumVariant::sqrt), ScheduleError);

  CHECK(avd_alpha(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(avd_alpha(4.0, 1.0) == doctest::Approx(1.0 + std::sqrt(2.0)));
  for (double g : {1e-8, 0.3, 9.0}) CHECK(avd_alpha(g, 1.0) > 1.0);
  for (double lip : {0.5, 4.0}) CHECK(avd_alpha(0.7, lip) >= 1.0 / std::sqrt(lip));
}
