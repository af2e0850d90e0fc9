#include "convflow/problems.hpp"
#include "convflow/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace convflow;

TEST_CASE("quadratic oracle examples") {
  const auto q = make_quadratic(Vector{{1.0}}, Vector{{0.0}});
  CHECK(q.eval_f(Vector{{2.0}}) == doctest::Approx(2.0));
  CHECK(q.grad_h(Vector{{2.0}})[0] == doctest::Approx(2.0));
  CHECK(q.x_star[0] == 0.0);

  const auto q2 = make_quadratic(Vector{{1.0, 10.0}}, Vector{{0.0, 0.0}});
  CHECK(q2.mu == 1.0);
  CHECK(q2.lip == 10.0);

  const auto q3 = make_quadratic(Vector{{2.0}}, Vector{{4.0}});
  CHECK(q3.x_star[0] == doctest::Approx(2.0));
  CHECK(q3.f_star == doctest::Approx(-4.0));
  CHECK(q3.eval_f(q3.x_star) == doctest::Approx(q3.f_star));
}

TEST_CASE("quadratic validation") {
  CHECK_THROWS_AS(make_quadratic(Vector{{1.0, 0.0}}, Vector{{0.0, 0.0}}), InvalidProblem);
  CHECK_THROWS_AS(make_quadratic(Vector{{1.0, -2.0}}, Vector{{0.0, 0.0}}), InvalidProblem);
  CHECK_THROWS_AS(make_quadratic(Vector{{1.0}}, Vector{{0.0, 0.0}}), InvalidProblem);
  CHECK_THROWS_AS(make_quadratic(Vector(0), Vector(0)), InvalidProblem);
}

TEST_CASE("quadratic proximal map solves its optimality condition") {
  const auto q = make_quadratic(Vector{{1.0, 4.0, 10.0}}, Vector{{1.0, -2.0, 0.5}});
  CounterRng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vector w = rng.uniform_box(Vector::Zero(3), 5.0);
    const double s = rng.uniform(0.01, 10.0);
    const Vector z = q.prox_f(w, s);
    const Vector residual = s * q.grad_h(z) + z - w;
    CHECK(residual.norm() <= 1e-12 * (1.0 + w.norm()));
  }
}

TEST_CASE("lasso soft thresholding and validation") {
  Matrix a = Matrix::Identity(1, 1);
  const auto p = make_lasso(a, Vector{{0.0}}, 1.0);
  CHECK(p.prox_g(Vector{{3.0}}, 1.0)[0] == doctest::Approx(2.0));
  CHECK(p.prox_g(Vector{{0.5}}, 1.0)[0] == 0.0);
  CHECK(p.prox_g(Vector{{-3.0}}, 0.5)[0] == doctest::Approx(-2.5));
  CHECK_FALSE(p.smooth);
  CHECK_THROWS_AS(make_lasso(Matrix::Identity(2, 2), Vector{{1.0}}, 0.5), InvalidProblem);
  CHECK_THROWS_AS(make_lasso(Matrix::Identity(2, 2), Vector{{1.0, 0.0}}, 0.0), InvalidProblem);
}

TEST_CASE("lasso with identity design matches coordinatewise soft thresholding") {
  // Oracle: for A = I the problem separates; x_i = sign(b_i) max(|b_i| - rho, 0).
  const Vector b{{1.0, 0.0}};
  const auto p = make_lasso(Matrix::Identity(2, 2), b, 0.5);
  CHECK(p.x_star[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(p.x_star[1]) <= 1e-12);
  CHECK(p.mu == doctest::Approx(1.0));
  CHECK(p.lip == doctest::Approx(1.0));

  const Vector b3{{2.0, -0.3, -1.5}};
  const auto p3 = make_lasso(Matrix::Identity(3, 3), b3, 0.4);
  const Vector expected{{1.6, 0.0, -1.1}};
  CHECK((p3.x_star - expected).norm() <= 1e-12);
}

TEST_CASE("lasso reference solution satisfies the optimality system") {
  for (auto [rows, cols, seed] : {std::tuple{20, 50, 1}, std::tuple{50, 100, 2}, std::tuple{40, 10, 3}}) {
    const auto p = make_random_lasso(rows, cols, static_cast<std::uint64_t>(seed));
    const Vector grad = p.grad_h(p.x_star);
    const double rho = p.eval_g(Vector::Ones(p.dim)) / static_cast<double>(p.dim);
    for (Eigen::Index i = 0; i < p.dim; ++i) {
      if (p.x_star[i] == 0.0) {
        CHECK(std::abs(grad[i]) <= rho * (1.0 + 1e-9));
      } else {
        CHECK(std::abs(grad[i] + rho * (p.x_star[i] > 0.0 ? 1.0 : -1.0)) <= 1e-9 * (1.0 + rho));
      }
    }
    CHECK(gradient_mapping_norm(p, p.x_star) <= 1e-9);
  }
}

TEST_CASE("lasso constants against a dense eigen decomposition") {
  // Oracle: eigenvalues of A^T A from the singular values of A.
  const auto p = make_random_lasso(40, 10, 3);
  CounterRng rng(3, 7);
  Matrix a(40, 10);
  const double sd = 1.0 / std::sqrt(40.0);
  for (Eigen::Index j = 0; j < 10; ++j)
    for (Eigen::Index i = 0; i < 40; ++i) a(i, j) = sd * rng.normal();
  const Eigen::JacobiSVD<Matrix> svd(a);
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  CHECK(p.lip == doctest::Approx(smax * smax).epsilon(1e-9));
  CHECK(p.mu == doctest::Approx(smin * smin).epsilon(1e-9));

  const auto wide = make_random_lasso(20, 50, 1);
  CHECK(wide.mu == 0.0);
}

TEST_CASE("log-cosh oracle examples") {
  const auto p = make_logcosh(1.0, Vector{{2.0}});
  CHECK(p.eval_f(Vector{{0.0}}) == doctest::Approx(std::numbers::ln2));
  CHECK(p.grad_h(Vector{{0.0}})[0] == 0.0);
  CHECK(p.grad_h(Vector{{40.0}})[0] == doctest::Approx(1.0));
  CHECK(p.mu == 0.0);
  CHECK(p.lip == 1.0);
  CHECK(*p.radius_r0 == doctest::Approx(2.0).epsilon(1e-11));

  const auto s = make_logcosh(3.0, Vector{{0.3, -0.2}});
  CHECK(s.lip == 9.0);
  CHECK_THROWS_AS(make_logcosh(0.0, Vector{{1.0}}), InvalidProblem);
}

TEST_CASE("log_cosh is accurate and overflow free") {
  for (double u : {1e-8, 1e-3, 0.5, 1.0, 3.0, 10.0, 19.0, 21.0}) {
    CHECK(log_cosh(u) == doctest::Approx(std::log(std::cosh(u))).epsilon(1e-13));
    CHECK(log_cosh(-u) == log_cosh(u));
  }
  CHECK(log_cosh(1e-8) == doctest::Approx(0.5e-16).epsilon(1e-8));
  CHECK(log_cosh(1000.0) == doctest::Approx(1000.0 - std::numbers::ln2));
  CHECK(log_cosh(0.0) == 0.0);
}

TEST_CASE("log-cosh proximal map solves its optimality condition") {
  const auto p = make_logcosh(2.0, Vector{{1.0, 1.0, 1.0}});
  CounterRng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Vector w = rng.uniform_box(Vector::Zero(3), 20.0);
    const double t = rng.uniform(0.001, 50.0);
    const Vector z = p.prox_f(w, t);
    const Vector residual = z - w + t * p.grad_h(z);
    CHECK(residual.norm() <= 1e-10 * (1.0 + w.norm()));
  }
}

TEST_CASE("log-cosh radius bounds the sublevel set") {
  const auto p = make_logcosh(1.0, Vector{{2.0, -1.0, 0.5}});
  const double r0 = *p.radius_r0;
  const double level = p.level();
  Vector axis = Vector::Zero(3);
  axis[1] = r0;
  CHECK(p.eval_f(axis) == doctest::Approx(level).epsilon(1e-10));
  CounterRng rng(2);
  int inside = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vector x = rng.uniform_box(Vector::Zero(3), r0);
    if (p.eval_f(x) <= level) {
      ++inside;
      CHECK(x.norm() <= r0 * (1.0 + 1e-12));
    }
  }
  CHECK(inside > 100);
}

TEST_CASE("subgradient residual examples") {
  const auto l = make_lasso(Matrix::Identity(1, 1), Vector{{0.0}}, 1.0);
  CHECK(subgradient_residual(l, Vector{{3.0}}, 1.0)[0] == doctest::Approx(1.0));
  CHECK(subgradient_residual(l, Vector{{0.5}}, 1.0)[0] == doctest::Approx(0.5));
  const auto q = make_quadratic(Vector{{1.0, 2.0}}, Vector{{0.0, 0.0}});
  CHECK(subgradient_residual(q, Vector{{3.0, -1.0}}, 0.7).norm() == 0.0);
  CHECK_THROWS_AS(subgradient_residual(q, Vector{{3.0, -1.0}}, 0.0), ParameterError);
}

TEST_CASE("builtin oracles satisfy the class inequalities") {
  for (const auto& p : builtin_problems()) {
    CAPTURE(p.name);
    CHECK(p.mu <= p.lip);
    CHECK(p.mu >= 0.0);
    CounterRng rng(0, 1);
    for (int i = 0; i < 1000; ++i) {
      const Vector x = rng.uniform_box(p.x_star, 10.0);
      const Vector y = rng.uniform_box(p.x_star, 10.0);
      const double d2 = (x - y).squaredNorm();
      const double m = (p.grad_h(x) - p.grad_h(y)).dot(x - y);
      const double tol = 1e-9 * (1.0 + d2);
      CHECK(m - p.mu * d2 >= -tol);
      CHECK(p.lip * d2 - m >= -tol);
      CHECK(p.eval_f(x) >= p.f_star - 1e-9);
    }
    CHECK(std::abs(p.f_gap(p.x_star)) < 1e-8);
    if (p.smooth) CHECK(p.grad_h(p.x_star).norm() <= 1e-10 * p.lip * (1.0 + p.x_star.norm()));
  }
}

TEST_CASE("prox_g is firmly nonexpansive and yields subgradients") {
  for (const auto& p : builtin_problems()) {
    CAPTURE(p.name);
    CounterRng rng(1, 2);
    for (int i = 0; i < 100; ++i) {
      const Vector u = rng.uniform_box(p.x_star, 10.0);
      const Vector w = rng.uniform_box(p.x_star, 10.0);
      const double s = rng.uniform(0.01, 2.0);
      const Vector pu = p.prox_g(u, s);
      const Vector pw = p.prox_g(w, s);
      CHECK((pu - pw).squaredNorm() <= (pu - pw).dot(u - w) + 1e-12);
      const Vector q = subgradient_residual(p, w, s);
      for (int j = 0; j < 100; ++j) {
        const Vector y = rng.uniform_box(p.x_star, 10.0);
        CHECK(p.eval_g(y) >= p.eval_g(pw) + q.dot(y - pw) - 1e-9);
      }
    }
  }
}

TEST_CASE("random lasso is deterministic in its seed") {
  const auto a = make_random_lasso(20, 30, 4);
  const auto b = make_random_lasso(20, 30, 4);
  const auto c = make_random_lasso(20, 30, 5);
  CHECK(a.x_star == b.x_star);
  CHECK(a.lip == b.lip);
  CHECK(a.lip != c.lip);
}
