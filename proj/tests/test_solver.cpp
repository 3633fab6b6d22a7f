#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "recon/errors.hpp"
#include "recon/rng.hpp"
#include "recon/solver.hpp"

using namespace recon;

namespace {

GlsProblem stacked_two_leaf(double x, double y, double z) {
  GlsProblem p;
  p.design.resize(3, 2);
  p.design << 1, 1,
              1, 0,
              0, 1;
  p.target.resize(3);
  p.target << x, y, z;
  p.weight = Matrix::Identity(3, 3);
  return p;
}

GlsProblem random_problem(Rng& rng, int rows, int cols) {
  GlsProblem p;
  p.design.resize(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) p.design(i, j) = rng.normal();
  p.target = rng.normal_vector(rows) * 3.0;
  p.weight = oracle::random_spd(rows, rng);
  return p;
}

double normal_eq_residual(const GlsProblem& p, const Vector& x) {
  const Vector lhs =
      p.design.transpose() * p.weight.ldlt().solve(p.target - p.design * x);
  const Vector rhs = p.design.transpose() * p.weight.ldlt().solve(p.target);
  return lhs.cwiseAbs().maxCoeff() / (1e-30 + rhs.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("gls mean") {
  GlsProblem p;
  p.design = Matrix::Ones(2, 1);
  p.target.resize(2);
  p.target << 4, 6;
  p.weight = Matrix::Identity(2, 2);
  const Vector x = solve_gls(p);
  CHECK(x(0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("gls on the stacked two-leaf problem") {
  const GlsProblem p = stacked_two_leaf(10, 4, 5);
  const Vector x = solve_gls(p);
  CHECK(x(0) == doctest::Approx(13.0 / 3).epsilon(1e-12));
  CHECK(x(1) == doctest::Approx(16.0 / 3).epsilon(1e-12));

  // dense grid cross-check
  const Vector g = oracle::grid_search_gls(p, 3.0, 7.0, 1e-3);
  CHECK(std::abs(g(0) - x(0)) <= 2e-3);
  CHECK(std::abs(g(1) - x(1)) <= 2e-3);
}

TEST_CASE("gls with an upweighted residual") {
  GlsProblem p = stacked_two_leaf(10, 4, 5);
  // variance 0.01 on the third observation = weight 100 on its residual
  p.weight(2, 2) = 0.01;
  const Vector x = solve_gls(p);
  const Vector g = oracle::grid_search_gls(p, 2.0, 8.0, 1e-3);
  CHECK(std::abs(g(0) - x(0)) <= 2e-3);
  CHECK(std::abs(g(1) - x(1)) <= 2e-3);
  // row 3 (Z = z) is nearly satisfied
  CHECK(std::abs(x(1) - 5.0) < std::abs(x(1) - 16.0 / 3));
}

TEST_CASE("gls satisfies the normal equations on random problems") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const GlsProblem p = random_problem(rng, 5 + trial % 6, 2 + trial % 3);
    const Vector x = solve_gls(p);
    CHECK(normal_eq_residual(p, x) <= 1e-8);
  }
}

TEST_CASE("gls error paths") {
  SUBCASE("rank-deficient design") {
    GlsProblem p;
    p.design.resize(3, 2);
    p.design << 1, 1,
                2, 2,
                3, 3;
    p.target = Vector::Zero(3);
    p.weight = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(solve_gls(p), SolverError);
  }
  SUBCASE("indefinite weight") {
    GlsProblem p;
    p.design = Matrix::Ones(2, 1);
    p.target = Vector::Zero(2);
    p.weight.resize(2, 2);
    p.weight << 1, 0,
                0, -1;
    CHECK_THROWS_AS(solve_gls(p), SolverError);
  }
  SUBCASE("dimension mismatch") {
    GlsProblem p;
    p.design = Matrix::Ones(2, 1);
    p.target = Vector::Zero(3);
    p.weight = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(solve_gls(p), ValidationError);
  }
}

TEST_CASE("nnls with inactive bounds equals gls") {
  const GlsProblem p = stacked_two_leaf(10, 4, 5);
  const QpSolution qp = solve_nnls(p, {true, true});
  const Vector x = solve_gls(p);
  CHECK(qp.active_set.empty());
  CHECK((qp.x - x).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(qp.kkt_residual <= 1e-8);
}

TEST_CASE("nnls clamps the negative coordinate") {
  const GlsProblem p = stacked_two_leaf(2, 5, -4);
  const QpSolution qp = solve_nnls(p, {true, true});
  REQUIRE(qp.active_set == std::vector<int>{1});
  CHECK(qp.x(0) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(qp.x(1) == 0.0);

  // KKT multiplier at the clamped coordinate: gradient of the full quadratic
  const Vector grad =
      2.0 * p.design.transpose() * (p.design * qp.x - p.target);
  CHECK(grad(1) == doctest::Approx(11.0).epsilon(1e-12));

  const QpSolution oracle_sol = oracle_enumerate(p, {true, true});
  CHECK((oracle_sol.x - qp.x).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("objective never improves under bounds") {
  Rng rng(47);
  for (int trial = 0; trial < 40; ++trial) {
    const GlsProblem p = random_problem(rng, 8, 4);
    const Vector free = solve_gls(p);
    const QpSolution qp = solve_nnls(p, std::vector<bool>(4, true));
    CHECK(oracle::gls_objective(p, qp.x) >=
          oracle::gls_objective(p, free) - 1e-10);
  }
}

TEST_CASE("nnls matches the enumeration oracle on random instances") {
  Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = 2 + trial % 5;
    const GlsProblem p = random_problem(rng, q + 3, q);
    std::vector<bool> mask(q);
    for (int i = 0; i < q; ++i) mask[i] = rng.uniform() < 0.8;
    const QpSolution fast = solve_nnls(p, mask);
    const QpSolution slow = oracle_enumerate(p, mask);
    CAPTURE(trial);
    CHECK((fast.x - slow.x).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(fast.kkt_residual <= 1e-8);
    for (int i = 0; i < q; ++i)
      if (mask[i]) CHECK(fast.x(i) >= -1e-10);
  }
}

TEST_CASE("scale invariance of the weight") {
  Rng rng(59);
  const GlsProblem p = random_problem(rng, 7, 3);
  GlsProblem scaled = p;
  scaled.weight *= 37.5;
  CHECK((solve_gls(p) - solve_gls(scaled)).cwiseAbs().maxCoeff() <=
        1e-9 * (1.0 + solve_gls(p).cwiseAbs().maxCoeff()));
  const QpSolution a = solve_nnls(p, {true, true, true});
  const QpSolution b = solve_nnls(scaled, {true, true, true});
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() <=
        1e-9 * (1.0 + a.x.cwiseAbs().maxCoeff()));
}

TEST_CASE("iteration cap carries the best iterate") {
  // needs one pivot per coordinate, so a cap of 1 stops mid-way
  GlsProblem p;
  p.design = Matrix::Identity(3, 3);
  p.target.resize(3);
  p.target << 1, 2, 3;
  p.weight = Matrix::Identity(3, 3);
  try {
    solve_nnls(p, {true, true, true}, 1);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.has_best);
    CHECK(e.best.x.size() == 3);
    CHECK(e.best.kkt_residual > 1e-8);
  }
}

TEST_CASE("enumeration oracle properties") {
  Rng rng(61);
  SUBCASE("strictly convex instances have exactly one KKT pattern") {
    for (int trial = 0; trial < 20; ++trial) {
      const GlsProblem p = random_problem(rng, 7, 4);
      int count = 0;
      oracle_enumerate(p, std::vector<bool>(4, true), &count);
      CHECK(count == 1);
    }
  }
  SUBCASE("all-inactive optimum equals gls") {
    GlsProblem p;
    p.design = Matrix::Identity(3, 3);
    p.target.resize(3);
    p.target << 1, 2, 3;
    p.weight = Matrix::Identity(3, 3);
    const QpSolution qp = oracle_enumerate(p, {true, true, true});
    CHECK((qp.x - p.target).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(qp.active_set.empty());
  }
  SUBCASE("too many bounded coordinates") {
    GlsProblem p;
    p.design = Matrix::Identity(13, 13);
    p.target = Vector::Zero(13);
    p.weight = Matrix::Identity(13, 13);
    CHECK_THROWS_AS(oracle_enumerate(p, std::vector<bool>(13, true)),
                    ValidationError);
  }
}
