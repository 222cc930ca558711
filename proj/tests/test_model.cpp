#include "ekfc/model.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace ekfc;
using namespace ekfc::testing;

namespace {

// x1' = x2 + 0.3 sin(x1), x2' = -x1 + 0.2 x1 x2;  y = x1 + 0.1 x2^2.
SystemModel planar_model(bool analytic) {
  SystemModel m;
  m.name = "planar";
  m.state_dim = 2;
  m.output_dim = 1;
  m.dynamics = [](const Vec& x, double) {
    Vec d(2);
    d << x(1) + 0.3 * std::sin(x(0)), -x(0) + 0.2 * x(0) * x(1);
    return d;
  };
  m.output = [](const Vec& x, double) { return scalar_vec(x(0) + 0.1 * x(1) * x(1)); };
  if (analytic) {
    m.jacobian_A = [](const Vec& x, double) {
      Mat A(2, 2);
      A << 0.3 * std::cos(x(0)), 1.0, -1.0 + 0.2 * x(1), 0.2 * x(0);
      return A;
    };
    m.jacobian_C = [](const Vec& x, double) {
      Mat C(1, 2);
      C << 1.0, 0.2 * x(1);
      return C;
    };
  }
  return m;
}

}  // namespace

TEST_CASE("eval_jacobians: analytic and finite-difference paths") {
  SUBCASE("x^2 at 1 gives 2") {
    const auto analytic = scalar_model([](double x) { return x * x; }, [](double x) { return x; },
                                       [](double x) { return 2 * x; }, [](double) { return 1.0; });
    CHECK(eval_jacobians(analytic, scalar_vec(1.0), 0.0).A(0, 0) == 2.0);
    const auto fd = scalar_model([](double x) { return x * x; }, [](double x) { return x; });
    CHECK(eval_jacobians(fd, scalar_vec(1.0), 0.0).A(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("linear field returns its matrix exactly") {
    Mat M(2, 2);
    M << 1.5, -2.0, 0.25, 3.0;
    const Mat C = (Mat(1, 2) << 1.0, 0.0).finished();
    const auto model = linear_model(M, C);
    const Jacobians J = eval_jacobians(model, Vec::Random(2), 1.0);
    CHECK(J.A == M);
    CHECK(J.C == C);
  }
  SUBCASE("sin at 0 by central differences matches cos(0)") {
    const auto model = scalar_model([](double x) { return std::sin(x); }, [](double x) { return x; });
    const double oracle = std::cos(0.0);
    CHECK(std::abs(eval_jacobians(model, scalar_vec(0.0), 0.0).A(0, 0) - oracle) <= 1e-8);
  }
  SUBCASE("non-finite evaluation is reported") {
    const auto model = scalar_model([](double x) { return std::log(x); }, [](double x) { return x; });
    CHECK_THROWS_AS(eval_jacobians(model, scalar_vec(-1.0), 0.0), EvaluationError);
    CHECK_THROWS_AS(eval_jacobians(model, scalar_vec(std::nan("")), 0.0), EvaluationError);
  }
}

TEST_CASE("fd step scales with the state norm") {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  CHECK(fd_step(Vec::Zero(3)) == base);
  CHECK(fd_step((Vec(2) << 30.0, 40.0).finished()) == doctest::Approx(50.0 * base));
}

TEST_CASE("analytic Jacobians agree with finite differences on random probes") {
  const SystemModel analytic = planar_model(true);
  const SystemModel fd = planar_model(false);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vec x = (Vec(2) << u(rng), u(rng)).finished();
    const Jacobians a = eval_jacobians(analytic, x, 0.0);
    const Jacobians f = eval_jacobians(fd, x, 0.0);
    const double dev = std::max((a.A - f.A).norm(), (a.C - f.C).norm());
    worst = std::max(worst, dev);
    worst_ratio = std::max(worst_ratio, dev / fd_step(x));
  }
  CHECK(worst_ratio <= 10.0);
  CHECK(worst < 1e-8);
}

TEST_CASE("tilde_matrices") {
  SUBCASE("identical points give zero") {
    const auto model = planar_model(true);
    const Vec x = (Vec(2) << 0.4, -1.2).finished();
    const TildeMatrices t = tilde_matrices(model, x, x, 0.0);
    CHECK(t.A.norm() == 0.0);
    CHECK(t.C.norm() == 0.0);
  }
  SUBCASE("linear system has zero tilde everywhere") {
    const auto model = linear_model(Mat::Random(3, 3), Mat::Random(2, 3));
    const TildeMatrices t = tilde_matrices(model, Vec::Random(3) * 10, Vec::Random(3), 0.0);
    CHECK(t.A.norm() == 0.0);
    CHECK(t.C.norm() == 0.0);
  }
  SUBCASE("cubic: 3z^2 - 3xhat^2") {
    const auto model = scalar_model([](double x) { return x * x * x; }, [](double x) { return x; },
                                    [](double x) { return 3 * x * x; }, [](double) { return 1.0; });
    CHECK(tilde_matrices(model, scalar_vec(1.0), scalar_vec(0.0), 0.0).A(0, 0) == 3.0);
  }
  SUBCASE("antisymmetric in its two points") {
    const auto model = planar_model(true);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
      const Vec z = random_matrix(rng, 2, 1);
      const Vec xh = random_matrix(rng, 2, 1);
      const TildeMatrices a = tilde_matrices(model, z, xh, 0.0);
      const TildeMatrices b = tilde_matrices(model, xh, z, 0.0);
      CHECK((a.A + b.A).norm() == 0.0);
      CHECK((a.C + b.C).norm() == 0.0);
    }
  }
}

TEST_CASE("tensor_norm") {
  SUBCASE("single slice is its spectral norm") {
    Mat H(2, 2);
    H << 2.0, 1.0, 1.0, -3.0;
    const double oracle = Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(tensor_norm({H}) == doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("decoupled slices: T(u,v) = (u1 v1, 2 u2 v2) has norm 2") {
    const Mat H1 = (Vec(2) << 1.0, 0.0).finished().asDiagonal();
    const Mat H2 = (Vec(2) << 0.0, 2.0).finished().asDiagonal();
    CHECK(tensor_norm({H1, H2}) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("estimate_hessian_bounds") {
  HessianEstimateOptions raw;
  raw.safety_factor = 1.0;

  SUBCASE("linear model has zero bounds") {
    const auto model = linear_model(Mat::Random(2, 2), Mat::Random(1, 2));
    const HessianBounds hb = estimate_hessian_bounds(model, {{Vec::Zero(2), 0.0}}, 5.0);
    CHECK(hb.kappa_A == 0.0);
    CHECK(hb.kappa_C == 0.0);
    CHECK_FALSE(hb.certified);
    CHECK(hb.alpha == 5.0);
  }
  SUBCASE("sin over [-pi/2, pi/2] is about 1") {
    const auto model = scalar_model([](double x) { return std::sin(x); }, [](double x) { return x; },
                                    [](double x) { return std::cos(x); }, [](double) { return 1.0; });
    // Oracle: dense-grid maximum of |f''| = |sin| on the ball.
    double oracle = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      oracle = std::max(oracle, std::abs(std::sin(-std::numbers::pi / 2 + std::numbers::pi * i / 10000)));
    }
    const HessianBounds hb = estimate_hessian_bounds(model, {{scalar_vec(0.0), 0.0}},
                                                     std::numbers::pi / 2, raw);
    CHECK(hb.kappa_A == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(hb.kappa_C == 0.0);
    const HessianBounds inflated =
        estimate_hessian_bounds(model, {{scalar_vec(0.0), 0.0}}, std::numbers::pi / 2);
    CHECK(inflated.kappa_A == doctest::Approx(1.1 * hb.kappa_A));
  }
  SUBCASE("monotone in radius") {
    const auto model = planar_model(true);
    double prev_A = 0.0, prev_C = 0.0;
    for (double r : {0.1, 0.5, 1.0, 2.0, 4.0}) {
      const HessianBounds hb = estimate_hessian_bounds(model, {{Vec::Zero(2), 0.0}}, r, raw);
      // Sample sets are not nested across radii, so only up to sampling resolution.
      CHECK(hb.kappa_A >= prev_A * (1 - 1e-4));
      CHECK(hb.kappa_C >= prev_C * (1 - 1e-4));
      prev_A = hb.kappa_A;
      prev_C = hb.kappa_C;
    }
    // Supremum over the plane: |0.3 sin x1| peaks at 0.3, the output slice is constant.
    CHECK(prev_A <= 0.3 * (1 + 1e-6));
    CHECK(prev_A >= 0.3 * (1 - 1e-4));
    CHECK(prev_C == doctest::Approx(0.2).epsilon(1e-5));
  }
  SUBCASE("rejects a nonpositive radius") {
    const auto model = planar_model(true);
    CHECK_THROWS_AS(estimate_hessian_bounds(model, {{Vec::Zero(2), 0.0}}, 0.0), ConfigError);
  }
}
