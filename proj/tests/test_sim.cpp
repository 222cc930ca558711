#include "ekfc/sim.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ekfc;
using namespace ekfc::testing;

namespace {

SystemModel decay(double a) {
  return scalar_model([a](double x) { return -a * x; }, [](double x) { return x; },
                      [a](double) { return -a; }, [](double) { return 1.0; });
}

FilterConfig scalar_filter(double q, double r, double p0, double xhat0, double step) {
  FilterConfig c;
  c.Q = scalar(q);
  c.R = scalar(r);
  c.P0 = scalar(p0);
  c.xhat0 = scalar_vec(xhat0);
  c.step = step;
  return c;
}

}  // namespace

TEST_CASE("SampledSignal interpolation") {
  const VectorSignal s({0.0, 1.0, 3.0}, {scalar_vec(0.0), scalar_vec(2.0), scalar_vec(-2.0)});
  CHECK(s(0.5)(0) == doctest::Approx(1.0));
  CHECK(s(2.0)(0) == doctest::Approx(0.0));
  CHECK(s(-1.0)(0) == 0.0);
  CHECK(s(5.0)(0) == -2.0);
  CHECK(s.covers(0.0, 3.0));
  CHECK_FALSE(s.covers(0.0, 3.5));
  CHECK_THROWS_AS(VectorSignal({0.0, 0.0}, {scalar_vec(0), scalar_vec(1)}), ConfigError);
}

TEST_CASE("integrate_truth matches exp(-a t)") {
  const TruthRun run = integrate_truth(decay(0.7), scalar_vec(2.0), 3.0, 0.01);
  REQUIRE(run.trajectory.times.size() == 301);
  CHECK(run.trajectory.times.back() == 3.0);
  for (std::size_t i = 0; i < run.trajectory.times.size(); i += 50) {
    const double t = run.trajectory.times[i];
    CHECK(run.trajectory.states[i](0) == doctest::Approx(2.0 * std::exp(-0.7 * t)).epsilon(1e-9));
    CHECK(run.measurements(t)(0) == run.trajectory.states[i](0));
  }
  const TruthRun fine = integrate_truth_for_filter(decay(0.7), scalar_vec(2.0), 3.0, 0.01);
  CHECK(fine.trajectory.times.size() == 601);
}

TEST_CASE("fit_decay_rate") {
  std::vector<double> t, v;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.1 * i);
    v.push_back(3.0 * std::exp(-1.7 * t.back()));
  }
  CHECK(fit_decay_rate(t, v) == doctest::Approx(1.7).epsilon(1e-10));

  // Values below the floor are skipped, not fitted.
  std::vector<double> clipped = v;
  for (std::size_t i = 50; i < clipped.size(); ++i) clipped[i] = 0.0;
  CHECK(fit_decay_rate(t, clipped) == doctest::Approx(1.7).epsilon(1e-10));

  CHECK(std::isnan(fit_decay_rate(t, std::vector<double>(t.size(), 0.0))));
  CHECK(std::isnan(fit_decay_rate({0.0}, {1.0})));
}

TEST_CASE("weighted_sq_distance") {
  const Vec a = (Vec(2) << 1.0, 2.0).finished();
  const Vec b = (Vec(2) << 0.0, 0.0).finished();
  const Mat P = (Vec(2) << 2.0, 4.0).finished().asDiagonal();
  CHECK(weighted_sq_distance(a, b, P) == doctest::Approx(0.5 + 1.0));
  CHECK(weighted_sq_distance(a, a, P) == 0.0);
}

TEST_CASE("virtual system with the filter's estimate as initial state reproduces it") {
  const SystemModel model = decay(0.5);
  const FilterConfig cfg = scalar_filter(1, 1, 1, 0.3, 0.01);
  const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(1.0), 5.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 5.0);
  const Trajectory z = integrate_virtual(model, filter.gain_schedule(), truth.measurements,
                                         cfg.xhat0, 5.0, cfg.step);
  double worst = 0.0;
  for (std::size_t i = 0; i < z.times.size(); ++i) {
    worst = std::max(worst, std::abs(z.states[i](0) - filter.xhat[i](0)));
  }
  // Gains are interpolated linearly between nodes: O(step²) agreement.
  CHECK(worst < 1e-5);

  const Trajectory zx = integrate_virtual(model, filter.gain_schedule(), truth.measurements,
                                          scalar_vec(1.0), 5.0, cfg.step);
  CHECK(std::abs(zx.states.back()(0) - truth.trajectory.states.back()(0)) < 1e-10);
}

TEST_CASE("twin_decay on a linear scalar plant") {
  // Error dynamics e' = −(a + K)e with K → p∞/r: squared distance rate → 2(a + p∞/r) − p'/p.
  const double a = 0.5, q = 1.0, r = 1.0;
  const double p_eq = r * (-a + std::sqrt(a * a + q / r));
  const SystemModel model = decay(a);
  const FilterConfig cfg = scalar_filter(q, r, p_eq, 0.0, 0.005);
  const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(1.0), 6.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 6.0);
  const ExperimentRun run = twin_decay(model, filter, truth.measurements, scalar_vec(1.0),
                                       scalar_vec(-1.0), 6.0);
  CHECK(run.fitted_rate == doctest::Approx(2.0 * (a + p_eq / r)).epsilon(1e-6));
  CHECK(run.in_basin);
  CHECK(run.virtual_trajs.size() == 2);
  CHECK(run.weighted_dist.front() == doctest::Approx(4.0 / p_eq));

  SUBCASE("shorter horizon uses a grid prefix") {
    const ExperimentRun part = twin_decay(model, filter, truth.measurements, scalar_vec(1.0),
                                          scalar_vec(-1.0), 2.0);
    CHECK(part.times.back() == doctest::Approx(2.0));
    CHECK_THROWS_AS(twin_decay(model, filter, truth.measurements, scalar_vec(1.0),
                               scalar_vec(-1.0), 7.0),
                    ConfigError);
  }
  SUBCASE("basin test") {
    ContractionCertificate cert;
    cert.rho = 1.0;
    cert.p_hi = p_eq;
    // Limit on (z − x̂0)²/p_eq is 1/p_eq, so |z| ≤ 1 passes.
    CHECK(twin_decay(model, filter, truth.measurements, scalar_vec(0.9), scalar_vec(-0.9), 1.0, &cert)
              .in_basin);
    CHECK_FALSE(twin_decay(model, filter, truth.measurements, scalar_vec(1.5), scalar_vec(0.0), 1.0,
                           &cert)
                    .in_basin);
  }
}

TEST_CASE("envelope_check") {
  const SystemModel model = decay(0.5);
  const FilterConfig cfg = scalar_filter(1, 1, 1, 0.0, 0.01);
  const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(1.0), 5.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 5.0);
  const ContractionCertificate cert =
      make_certificate(assumption1_report(filter, cfg.Q), HessianBounds{}, 1.0, 0.1);
  const EnvelopeResult env = envelope_check(filter, truth.trajectory, cert);
  CHECK(env.pass);
  CHECK(env.initial_in_basin);
  CHECK(env.error.front() == doctest::Approx(1.0));
  CHECK(env.envelope.front() == doctest::Approx(cert.envelope_factor));
  CHECK(env.worst_margin >= 0.0);

  ContractionCertificate too_fast = cert;
  too_fast.gamma = 50.0;
  CHECK_FALSE(envelope_check(filter, truth.trajectory, too_fast).pass);
}

TEST_CASE("perturbed_run") {
  // Constant-state plant at equilibrium gain K = 1: z − x̂ → b/K.
  const SystemModel model = scalar_model([](double) { return 0.0; }, [](double x) { return x; },
                                         [](double) { return 0.0; }, [](double) { return 1.0; });
  const FilterConfig cfg = scalar_filter(1, 1, 1, 0.0, 0.01);
  const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(0.0), 15.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 15.0);
  const ContractionCertificate cert =
      make_certificate(assumption1_report(filter, cfg.Q), HessianBounds{}, 1.0, 0.25);
  const Disturbance b = Disturbance::constant(scalar_vec(0.2));
  const PerturbedResult res =
      perturbed_run(model, filter, truth.measurements, b, cfg.xhat0, 15.0, cert);
  CHECK(res.steady_radius == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(res.radius_b_over_gamma == doctest::Approx(0.8));
  CHECK(res.radius_gamma_times_b == doctest::Approx(0.05));
  CHECK(res.steady_radius <= res.radius_b_over_gamma);

  Disturbance lying = b;
  lying.b_max = 0.1;
  CHECK_THROWS_AS(perturbed_run(model, filter, truth.measurements, lying, cfg.xhat0, 15.0, cert),
                  PreconditionError);
}

TEST_CASE("variational validator converges with the step") {
  const SystemModel model = scalar_model([](double x) { return -x + 0.1 * x * x * x; },
                                         [](double x) { return x; });
  auto deviation = [&](double step) {
    const FilterConfig cfg = scalar_filter(1, 1, 1, 0.4, step);
    const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(0.3), 4.0, step);
    const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 4.0);
    return variational_validator(model, filter, cfg, truth.measurements, scalar_vec(0.8),
                                 scalar_vec(0.1), 4.0)
        .max_rel_deviation;
  };
  const double coarse = deviation(0.004);
  const double fine = deviation(0.002);
  CHECK(coarse < 1e-4);
  CHECK(fine < coarse / 3.0);
}

TEST_CASE("integrate_truth reference values") {
  const SystemModel still = scalar_model([](double) { return 0.0; }, [](double x) { return x; });
  const TruthRun flat = integrate_truth(still, scalar_vec(1.25), 2.0, 0.1);
  for (const Vec& x : flat.trajectory.states) CHECK(x(0) == 1.25);

  const TruthRun unit = integrate_truth(decay(1.0), scalar_vec(1.0), 1.0, 0.01);
  CHECK(std::abs(unit.trajectory.states.back()(0) - std::exp(-1.0)) < 1e-6);
}

TEST_CASE("twin reference values at unit equilibrium gain") {
  // f = 0, q = r = p0 = 1: K ≡ 1, so δ' = −δ and the squared distance decays at rate 2.
  const SystemModel still = scalar_model([](double) { return 0.0; }, [](double x) { return x; },
                                         [](double) { return 0.0; }, [](double) { return 1.0; });
  const FilterConfig cfg = scalar_filter(1, 1, 1, 0.0, 0.01);
  const TruthRun truth = integrate_truth_for_filter(still, scalar_vec(0.0), 8.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(still, cfg, truth.measurements, 8.0);
  for (const Mat& K : filter.K) CHECK(K(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  const ExperimentRun run =
      twin_decay(still, filter, truth.measurements, scalar_vec(1.0), scalar_vec(-0.5), 8.0);
  CHECK(run.fitted_rate / 2.0 == doctest::Approx(1.0).epsilon(1e-8));

  const ExperimentRun same =
      twin_decay(still, filter, truth.measurements, scalar_vec(0.7), scalar_vec(0.7), 8.0);
  for (double d : same.weighted_dist) CHECK(d == 0.0);
  for (double d : same.euclid_dist) CHECK(d == 0.0);
}

TEST_CASE("envelope and perturbation with no initial error") {
  const SystemModel model = decay(0.5);
  const FilterConfig cfg = scalar_filter(1, 1, 1, 0.8, 0.01);
  const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(0.8), 6.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 6.0);
  const ContractionCertificate cert =
      make_certificate(assumption1_report(filter, cfg.Q), HessianBounds{}, 1.0, 0.2);
  const EnvelopeResult env = envelope_check(filter, truth.trajectory, cert);
  CHECK(env.pass);
  CHECK(env.error.front() == 0.0);

  const PerturbedResult res = perturbed_run(model, filter, truth.measurements,
                                            Disturbance::constant(scalar_vec(0.0)), cfg.xhat0,
                                            6.0, cert);
  CHECK(res.steady_radius < 1e-8);
  CHECK(res.radius_b_over_gamma == 0.0);
}

TEST_CASE("variational validator with a zero displacement") {
  const SystemModel model = scalar_model([](double x) { return -x + 0.1 * x * x * x; },
                                         [](double x) { return x; });
  const FilterConfig cfg = scalar_filter(1, 1, 1, 0.4, 0.01);
  const TruthRun truth = integrate_truth_for_filter(model, scalar_vec(0.3), 2.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 2.0);
  const VariationalReport rep = variational_validator(model, filter, cfg, truth.measurements,
                                                      scalar_vec(0.8), scalar_vec(0.0), 2.0);
  REQUIRE_FALSE(rep.lhs.empty());
  for (std::size_t i = 0; i < rep.lhs.size(); ++i) {
    CHECK(rep.lhs[i] == 0.0);
    CHECK(rep.rhs[i] == 0.0);
  }
  CHECK(rep.max_rel_deviation == 0.0);
}

TEST_CASE("weighted distance is bracketed by the covariance extremes") {
  Mat A(2, 2);
  A << -0.2, 1.0, -1.0, -0.3;
  SystemModel model;
  model.state_dim = 2;
  model.output_dim = 1;
  model.dynamics = [A](const Vec& x, double) {
    Vec dx = A * x;
    dx(1) -= 0.2 * x(0) * x(0) * x(0);
    return dx;
  };
  model.output = [](const Vec& x, double) { return scalar_vec(x(0)); };
  FilterConfig cfg;
  cfg.Q = Mat::Identity(2, 2);
  cfg.R = scalar(0.5);
  cfg.P0 = (Mat(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  cfg.xhat0 = Vec::Zero(2);
  cfg.step = 0.01;
  const TruthRun truth = integrate_truth_for_filter(model, (Vec(2) << 0.5, -0.5).finished(), 5.0, cfg.step);
  const FilterTrajectory filter = integrate_ekf(model, cfg, truth.measurements, 5.0);
  const ExperimentRun run = twin_decay(model, filter, truth.measurements,
                                       (Vec(2) << 1.0, 0.0).finished(),
                                       (Vec(2) << -0.5, 0.5).finished(), 5.0);
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const double e2 = run.euclid_dist[i] * run.euclid_dist[i];
    const double tol = 1e-12 * (1.0 + e2 / filter.p_min);
    CHECK(run.weighted_dist[i] >= e2 / filter.p_max - tol);
    CHECK(run.weighted_dist[i] <= e2 / filter.p_min + tol);
  }
}
