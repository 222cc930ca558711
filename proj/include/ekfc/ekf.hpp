#pragma once

#include "ekfc/linalg.hpp"
#include "ekfc/model.hpp"
#include "ekfc/signal.hpp"

#include <vector>

namespace ekfc {

/// K = P Cᵀ R⁻¹.
template <typename DP, typename DC, typename DR>
Eigen::Matrix<typename DP::Scalar, Eigen::Dynamic, Eigen::Dynamic> kalman_gain(
    const Eigen::MatrixBase<DP>& P, const Eigen::MatrixBase<DC>& C,
    const Eigen::MatrixBase<DR>& R) {
  using Plain = Eigen::Matrix<typename DP::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::LLT<Plain> llt{Plain(R)};
  if (llt.info() != Eigen::Success) {
    throw ConfigError("kalman_gain: R is not symmetric positive definite");
  }
  // (R⁻¹ C Pᵀ)ᵀ = P Cᵀ R⁻¹ for symmetric R.
  return llt.solve(Plain(C * P.transpose())).transpose();
}

/// A P + P Aᵀ + Q − P Cᵀ R⁻¹ C P + 2N.
template <typename DA, typename DP, typename DQ, typename DC, typename DR, typename DN>
Eigen::Matrix<typename DP::Scalar, Eigen::Dynamic, Eigen::Dynamic> riccati_rhs(
    const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DP>& P,
    const Eigen::MatrixBase<DQ>& Q, const Eigen::MatrixBase<DC>& C,
    const Eigen::MatrixBase<DR>& R, const Eigen::MatrixBase<DN>& N) {
  using Plain = Eigen::Matrix<typename DP::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Plain PCt = P * C.transpose();
  const Plain info = Eigen::LLT<Plain>(Plain(R)).solve(PCt.transpose());
  return A * P + P * A.transpose() + Q - PCt * info + 2.0 * N;
}

struct FilterConfig {
  Mat Q;
  Mat R;
  /// Inflation term 2N in the Riccati equation; zero when empty.
  Mat N;
  /// Adds 2βP to the Riccati equation when positive.
  double beta = 0.0;
  Vec xhat0;
  Mat P0;
  double step = 0.0;

  /// Checks shapes against the model and Q ≻ 0, R ≻ 0, P0 ≻ 0, N ⪰ 0, step > 0.
  void validate(int state_dim, int output_dim) const;
  Mat inflation(int state_dim) const;
};

struct FilterTrajectory {
  std::vector<double> times;
  std::vector<Vec> xhat;
  std::vector<Mat> P;
  std::vector<Mat> K;
  std::vector<double> lambda_min;
  std::vector<double> lambda_max;
  /// Running extrema of the eigenvalues of P over the whole grid.
  double p_min = 0.0;
  double p_max = 0.0;

  std::size_t size() const { return times.size(); }
  MatrixSignal gain_schedule() const;
  MatrixSignal covariance_schedule() const;
  VectorSignal estimate_signal() const;
};

/// Fixed-step RK4 integration of the coupled estimate / Riccati system on
/// [0, horizon], symmetrizing P after each step.
///
/// Throws Assumption1Violation when P fails a Cholesky factorization and
/// DivergenceError on a non-finite estimate.
FilterTrajectory integrate_ekf(const SystemModel& model, const FilterConfig& config,
                               const VectorSignal& measurements, double horizon);

struct Assumption1Report {
  double p_lo = 0.0;
  double p_hi = 0.0;
  double q_lo = 0.0;
  bool positive = false;
  /// Bounds come from the recorded grid, not from a proof.
  bool grid_verified = true;
};

Assumption1Report assumption1_report(const FilterTrajectory& traj, const Mat& Q);

}  // namespace ekfc
