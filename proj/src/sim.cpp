#include "ekfc/sim.hpp"

#include "ekfc/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ekfc {

namespace {

std::vector<double> uniform_grid(double horizon, double step) {
  const std::size_t steps = step_count(horizon, step);
  const double h = horizon / static_cast<double>(steps);
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = h * static_cast<double>(k);
  grid.back() = horizon;
  return grid;
}

/// Prefix of the filter grid ending at (or just past) `horizon`.
std::vector<double> filter_grid_prefix(const FilterTrajectory& filter, double horizon) {
  if (filter.size() < 2) throw ConfigError("filter trajectory has fewer than two samples");
  const double slack = 1e-9 * (1.0 + horizon);
  if (horizon > filter.times.back() + slack) {
    throw ConfigError("requested horizon exceeds the filter trajectory");
  }
  std::vector<double> grid;
  for (double t : filter.times) {
    grid.push_back(t);
    if (t >= horizon - slack) break;
  }
  return grid;
}

template <typename Rhs>
Trajectory integrate_on_grid(const Rhs& rhs, const Vec& y0, const std::vector<double>& grid,
                             const char* what) {
  Trajectory out;
  out.times = grid;
  out.states.reserve(grid.size());
  out.states.push_back(y0);
  Vec y = y0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    y = rk4_step(rhs, grid[k], y, grid[k + 1] - grid[k]);
    if (!y.allFinite()) throw DivergenceError(std::string(what) + " became non-finite", grid[k + 1]);
    out.states.push_back(y);
  }
  return out;
}

Trajectory integrate_virtual_on_grid(const SystemModel& model, const MatrixSignal& gains,
                                     const VectorSignal& measurements, const Vec& z0,
                                     const std::vector<double>& grid,
                                     const Disturbance* disturbance) {
  if (z0.size() != model.state_dim) throw ConfigError("virtual initial state has wrong dimension");
  if (!gains.covers(grid.front(), grid.back()) ||
      !measurements.covers(grid.front(), grid.back())) {
    throw ConfigError("gain schedule or measurements do not cover the horizon");
  }
  auto rhs = [&](double t, const Vec& z) -> Vec {
    Vec dz = model.f(z, t) - gains(t) * (model.h(z, t) - measurements(t));
    if (disturbance) {
      const Vec b = disturbance->b(z, t);
      if (b.norm() > disturbance->b_max * (1.0 + 1e-12) + 1e-300) {
        throw PreconditionError("disturbance exceeds its declared norm bound");
      }
      dz += b;
    }
    return dz;
  };
  return integrate_on_grid(rhs, z0, grid, "virtual trajectory");
}

}  // namespace

TruthRun integrate_truth(const SystemModel& model, const Vec& x0, double horizon, double step) {
  if (x0.size() != model.state_dim) throw ConfigError("x0 has wrong dimension");
  auto rhs = [&](double t, const Vec& x) -> Vec { return model.f(x, t); };
  TruthRun run;
  run.trajectory = integrate_on_grid(rhs, x0, uniform_grid(horizon, step), "true state");
  std::vector<Vec> ys;
  ys.reserve(run.trajectory.times.size());
  for (std::size_t i = 0; i < run.trajectory.times.size(); ++i) {
    ys.push_back(model.h(run.trajectory.states[i], run.trajectory.times[i]));
  }
  run.measurements = VectorSignal(run.trajectory.times, std::move(ys));
  return run;
}

TruthRun integrate_truth_for_filter(const SystemModel& model, const Vec& x0, double horizon,
                                    double filter_step) {
  const std::size_t steps = step_count(horizon, filter_step);
  return integrate_truth(model, x0, horizon, horizon / static_cast<double>(2 * steps));
}

Disturbance Disturbance::none(int state_dim) {
  return {[state_dim](const Vec&, double) { return Vec::Zero(state_dim).eval(); }, 0.0};
}

Disturbance Disturbance::constant(const Vec& value) {
  return {[value](const Vec&, double) { return value; }, value.norm()};
}

Trajectory integrate_virtual(const SystemModel& model, const MatrixSignal& gains,
                             const VectorSignal& measurements, const Vec& z0, double horizon,
                             double step, const Disturbance* disturbance) {
  return integrate_virtual_on_grid(model, gains, measurements, z0, uniform_grid(horizon, step),
                                   disturbance);
}

double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                      double window_lo, double window_hi, double floor) {
  if (times.size() != values.size() || times.size() < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double t0 = times.front();
  const double span = times.back() - t0;
  const double a = t0 + window_lo * span;
  const double b = t0 + window_hi * span;
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < a || times[i] > b || !(values[i] >= floor)) continue;
    const double y = std::log(values[i]);
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double cnt = static_cast<double>(count);
  const double denom = cnt * stt - st * st;
  if (denom <= 0) return std::numeric_limits<double>::quiet_NaN();
  return -(cnt * sty - st * sy) / denom;
}

double weighted_sq_distance(const Vec& a, const Vec& b, const Mat& P) {
  const Vec d = a - b;
  return d.dot(Eigen::LLT<Mat>(P).solve(d));
}

ExperimentRun twin_decay(const SystemModel& model, const FilterTrajectory& filter,
                         const VectorSignal& measurements, const Vec& z1_0, const Vec& z2_0,
                         double horizon, const ContractionCertificate* certificate) {
  const auto grid = filter_grid_prefix(filter, horizon);
  const MatrixSignal gains = filter.gain_schedule();

  ExperimentRun run;
  if (certificate) {
    const double limit = certificate->rho * certificate->rho / certificate->p_hi;
    for (const Vec* z : {&z1_0, &z2_0}) {
      if (weighted_sq_distance(*z, filter.xhat.front(), filter.P.front()) > limit) {
        run.in_basin = false;
      }
    }
  }
  run.virtual_trajs.push_back(
      integrate_virtual_on_grid(model, gains, measurements, z1_0, grid, nullptr));
  run.virtual_trajs.push_back(
      integrate_virtual_on_grid(model, gains, measurements, z2_0, grid, nullptr));
  run.times = grid;
  const auto& z1 = run.virtual_trajs[0].states;
  const auto& z2 = run.virtual_trajs[1].states;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    run.measurements.push_back(measurements(grid[i]));
    run.weighted_dist.push_back(weighted_sq_distance(z1[i], z2[i], filter.P[i]));
    run.euclid_dist.push_back((z1[i] - z2[i]).norm());
  }
  run.fitted_rate = fit_decay_rate(run.times, run.weighted_dist);
  return run;
}

EnvelopeResult envelope_check(const FilterTrajectory& filter, const Trajectory& truth,
                              const ContractionCertificate& certificate, double abs_tol) {
  if (filter.size() == 0) throw ConfigError("envelope_check: empty filter trajectory");
  const VectorSignal x = truth.signal();
  EnvelopeResult out;
  const double e0 = (filter.xhat.front() - x(filter.times.front())).norm();
  out.initial_in_basin = e0 <= certificate.basin_euclid;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < filter.size(); ++i) {
    const double t = filter.times[i];
    if (t > truth.times.back() + 1e-9 * (1.0 + t)) break;
    const double err = (filter.xhat[i] - x(t)).norm();
    const double env = certificate.envelope_factor * e0 * std::exp(-certificate.gamma * t);
    out.times.push_back(t);
    out.error.push_back(err);
    out.envelope.push_back(env);
    out.margin.push_back(env - err);
    out.worst_margin = std::min(out.worst_margin, env - err);
  }
  out.pass = out.worst_margin >= -abs_tol;
  return out;
}

PerturbedResult perturbed_run(const SystemModel& model, const FilterTrajectory& filter,
                              const VectorSignal& measurements, const Disturbance& disturbance,
                              const Vec& z0, double horizon,
                              const ContractionCertificate& certificate) {
  const auto grid = filter_grid_prefix(filter, horizon);
  PerturbedResult out;
  ExperimentRun& run = out.run;
  run.virtual_trajs.push_back(integrate_virtual_on_grid(model, filter.gain_schedule(),
                                                        measurements, z0, grid, &disturbance));
  run.times = grid;
  const auto& z = run.virtual_trajs[0].states;
  const double tail_start = grid.front() + (2.0 / 3.0) * (grid.back() - grid.front());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    run.measurements.push_back(measurements(grid[i]));
    run.weighted_dist.push_back(weighted_sq_distance(z[i], filter.xhat[i], filter.P[i]));
    const double e = (z[i] - filter.xhat[i]).norm();
    run.euclid_dist.push_back(e);
    if (grid[i] >= tail_start) out.steady_radius = std::max(out.steady_radius, e);
  }
  run.fitted_rate = fit_decay_rate(run.times, run.weighted_dist);
  out.radius_gamma_times_b = certificate.envelope_factor * certificate.gamma * disturbance.b_max;
  out.radius_b_over_gamma = certificate.gamma > 0
                                ? certificate.envelope_factor * disturbance.b_max / certificate.gamma
                                : std::numeric_limits<double>::infinity();
  return out;
}

VariationalReport variational_validator(const SystemModel& model, const FilterTrajectory& filter,
                                        const FilterConfig& config,
                                        const VectorSignal& measurements, const Vec& z0,
                                        const Vec& dz0, double horizon) {
  const int n = model.state_dim;
  if (dz0.size() != n) throw ConfigError("variational_validator: dz0 has wrong dimension");
  const auto grid = filter_grid_prefix(filter, horizon);
  if (grid.size() < 3) throw ConfigError("variational_validator: horizon too short");
  const MatrixSignal gains = filter.gain_schedule();

  auto rhs = [&](double t, const Vec& y) -> Vec {
    const Vec z = y.head(n);
    const Vec dz = y.tail(n);
    const Mat K = gains(t);
    const Jacobians J = eval_jacobians(model, z, t);
    Vec out(2 * n);
    out.head(n) = model.f(z, t) - K * (model.h(z, t) - measurements(t));
    out.tail(n) = (J.A - K * J.C) * dz;
    return out;
  };
  Vec y0(2 * n);
  y0 << z0, dz0;
  const Trajectory aug = integrate_on_grid(rhs, y0, grid, "variational state");

  const Mat N = config.inflation(n);
  std::vector<double> V(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec dz = aug.states[i].tail(n);
    V[i] = dz.dot(Eigen::LLT<Mat>(filter.P[i]).solve(dz));
  }

  VariationalReport rep;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const Vec z = aug.states[i].head(n);
    const Vec dz = aug.states[i].tail(n);
    const Mat& P = filter.P[i];
    Mat M = contraction_matrix(model, z, filter.xhat[i], P, config.Q, config.R, t);
    M -= 2.0 * N + 2.0 * config.beta * P;
    const Vec w = Eigen::LLT<Mat>(P).solve(dz);
    const double lhs = (V[i + 1] - V[i - 1]) / (grid[i + 1] - grid[i - 1]);
    const double rhs_val = w.dot(M * w);
    rep.times.push_back(t);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs_val);
    const double scale = std::abs(rhs_val);
    if (scale > 0) {
      rep.max_rel_deviation = std::max(rep.max_rel_deviation, std::abs(lhs - rhs_val) / scale);
    } else if (lhs != 0.0) {
      rep.max_rel_deviation = std::numeric_limits<double>::infinity();
    }
  }
  return rep;
}

}  // namespace ekfc
