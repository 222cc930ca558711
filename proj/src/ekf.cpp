#include "ekfc/ekf.hpp"

#include "ekfc/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ekfc {

namespace {

void require_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
}

void require_spd(const Mat& m, const char* name) {
  if (!is_symmetric(m) || !is_positive_definite(m)) {
    throw ConfigError(std::string(name) + " must be symmetric positive definite");
  }
}

}  // namespace

void FilterConfig::validate(int n, int p) const {
  require_shape(Q, n, n, "Q");
  require_shape(R, p, p, "R");
  require_shape(P0, n, n, "P0");
  if (xhat0.size() != n) throw ConfigError("xhat0 has wrong dimension");
  if (!xhat0.allFinite()) throw ConfigError("xhat0 must be finite");
  require_spd(Q, "Q");
  require_spd(R, "R");
  require_spd(P0, "P0");
  if (N.size() != 0) {
    require_shape(N, n, n, "N");
    if (!is_symmetric(N) || lambda_min(N) < -1e-12 * (1.0 + N.norm())) {
      throw ConfigError("N must be symmetric positive semidefinite");
    }
  }
  if (!(beta >= 0)) throw ConfigError("beta must be nonnegative");
  if (!(step > 0)) throw ConfigError("step must be positive");
}

Mat FilterConfig::inflation(int n) const { return N.size() == 0 ? Mat::Zero(n, n) : N; }

MatrixSignal FilterTrajectory::gain_schedule() const { return MatrixSignal(times, K); }
MatrixSignal FilterTrajectory::covariance_schedule() const { return MatrixSignal(times, P); }
VectorSignal FilterTrajectory::estimate_signal() const { return VectorSignal(times, xhat); }

FilterTrajectory integrate_ekf(const SystemModel& model, const FilterConfig& config,
                               const VectorSignal& measurements, double horizon) {
  const int n = model.state_dim;
  const int p = model.output_dim;
  config.validate(n, p);
  if (!measurements.covers(0.0, horizon)) {
    throw ConfigError("integrate_ekf: measurements do not cover [0, horizon]");
  }

  const std::size_t steps = step_count(horizon, config.step);
  const double h = horizon / static_cast<double>(steps);
  const Mat N = config.inflation(n);

  auto rhs = [&](double t, const Vec& y) -> Vec {
    const Vec x = y.head(n);
    const Eigen::Map<const Mat> P(y.data() + n, n, n);
    const Jacobians J = eval_jacobians(model, x, t);
    const Mat K = kalman_gain(P, J.C, config.R);
    Vec dy(y.size());
    dy.head(n) = model.f(x, t) - K * (model.h(x, t) - measurements(t));
    Mat dP = riccati_rhs(J.A, P, config.Q, J.C, config.R, N);
    if (config.beta > 0) dP += 2.0 * config.beta * P;
    dy.tail(n * n) = Eigen::Map<const Vec>(dP.data(), n * n);
    return dy;
  };

  FilterTrajectory traj;
  traj.times.reserve(steps + 1);
  traj.p_min = std::numeric_limits<double>::infinity();
  traj.p_max = -std::numeric_limits<double>::infinity();

  auto record = [&](double t, const Vec& x, const Mat& P) {
    const Mat C = jacobian_C(model, x, t);
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    traj.times.push_back(t);
    traj.xhat.push_back(x);
    traj.P.push_back(P);
    traj.K.push_back(kalman_gain(P, C, config.R));
    traj.lambda_min.push_back(lo);
    traj.lambda_max.push_back(hi);
    traj.p_min = std::min(traj.p_min, lo);
    traj.p_max = std::max(traj.p_max, hi);
  };

  Vec y(n + n * n);
  y.head(n) = config.xhat0;
  const Mat P0 = symmetrized(config.P0);
  y.tail(n * n) = Eigen::Map<const Vec>(P0.data(), n * n);
  record(0.0, config.xhat0, P0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = h * static_cast<double>(k);
    const double t_next = (k + 1 == steps) ? horizon : h * static_cast<double>(k + 1);
    y = rk4_step(rhs, t, y, h);
    if (!y.head(n).allFinite()) {
      throw DivergenceError("EKF estimate became non-finite", t_next);
    }
    Mat P = symmetrized(Eigen::Map<const Mat>(y.data() + n, n, n));
    if (!is_positive_definite(P)) {
      throw Assumption1Violation("Riccati solution lost positive definiteness", t_next);
    }
    y.tail(n * n) = Eigen::Map<const Vec>(P.data(), n * n);
    record(t_next, y.head(n), P);
  }
  return traj;
}

Assumption1Report assumption1_report(const FilterTrajectory& traj, const Mat& Q) {
  if (traj.size() == 0) throw ConfigError("assumption1_report: empty trajectory");
  Assumption1Report r;
  r.p_lo = *std::min_element(traj.lambda_min.begin(), traj.lambda_min.end());
  r.p_hi = *std::max_element(traj.lambda_max.begin(), traj.lambda_max.end());
  r.q_lo = lambda_min(Q);
  r.positive = r.p_lo > 0;
  r.grid_verified = true;
  return r;
}

}  // namespace ekfc
