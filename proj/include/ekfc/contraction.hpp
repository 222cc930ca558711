#pragma once

#include "ekfc/ekf.hpp"
#include "ekfc/linalg.hpp"
#include "ekfc/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ekfc {

/// Contraction matrix of the virtual observer in the P⁻¹ metric:
///   M = PÃᵀ + ÃP + PC̃ᵀR⁻¹C̃P − PCᵀR⁻¹CP − Q,
/// with C = C(z,t), Ã = A(z,t) − A(x̂,t), C̃ = C(z,t) − C(x̂,t).
template <typename DP, typename DQ, typename DR, typename DAt, typename DCt, typename DC>
Eigen::Matrix<typename DP::Scalar, Eigen::Dynamic, Eigen::Dynamic> contraction_matrix(
    const Eigen::MatrixBase<DP>& P, const Eigen::MatrixBase<DQ>& Q,
    const Eigen::MatrixBase<DR>& R, const Eigen::MatrixBase<DAt>& A_tilde,
    const Eigen::MatrixBase<DCt>& C_tilde, const Eigen::MatrixBase<DC>& C) {
  using Plain = Eigen::Matrix<typename DP::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::LLT<Plain> llt{Plain(R)};
  const Plain CtP = C_tilde * P;
  const Plain CP = C * P;
  const Plain AP = A_tilde * P;
  const Plain M = AP + AP.transpose() + CtP.transpose() * llt.solve(CtP) -
                  CP.transpose() * llt.solve(CP) - Q;
  return symmetrized(M);
}

Mat contraction_matrix(const SystemModel& model, const Vec& z, const Vec& xhat, const Mat& P,
                       const Mat& Q, const Mat& R, double t);

/// λ_max(M + 2γP); nonpositive (within tolerance) iff M + 2γP ⪯ 0 holds at z.
double lemma1_margin(const SystemModel& model, const Vec& z, const Vec& xhat, const Mat& P,
                     const Mat& Q, const Mat& R, double gamma, double t);

/// M + 2γP ⪯ 0, with the semidefinite tolerance λ_max ≤ 1e-9·(1 + ‖M + 2γP‖).
bool check_lemma1(const SystemModel& model, const Vec& z, const Vec& xhat, const Mat& P,
                  const Mat& Q, const Mat& R, double gamma, double t);

struct RadiusOptions {
  int random_directions = 64;
  std::uint64_t seed = 0;
  /// Returned when the inequality holds at this radius in every sampled direction.
  double max_radius = 1e6;
  double rel_tol = 1e-10;
};

/// Largest r such that M + 2γP ⪯ 0 holds at x̂ + r·u for every
/// sampled unit direction u (± axes plus random directions). A supremum over
/// a finite direction set, so an over-approximation of the true radius.
double empirical_radius(const SystemModel& model, const Vec& xhat, const Mat& P, const Mat& Q,
                        const Mat& R, double gamma, double t, const RadiusOptions& options = {});

/// Largest admissible rate q̲/(2p̄).
double gamma_cap(double q_lo, double p_hi);
/// Default rate q̲/(4p̄).
double default_gamma(double q_lo, double p_hi);

/// Positive root of (p̄²/r̲)κ_C²ζ² + 2p̄κ_Aζ − (q̲ − 2γp̄) = 0; +∞ when both κ vanish.
double zeta_plus(double kappa_A, double kappa_C, double p_hi, double q_lo, double r_lo,
                 double gamma);

struct ContractionCertificate {
  double gamma = 0.0;
  double zeta_plus = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  double kappa_A = 0.0;
  double kappa_C = 0.0;
  double p_lo = 0.0;
  double p_hi = 0.0;
  double q_lo = 0.0;
  double r_lo = 0.0;
  /// ρ·√(p̲/p̄): Euclidean radius of certified initial errors.
  double basin_euclid = 0.0;
  /// √(p̄/p̲): multiplier of the Euclidean error envelope.
  double envelope_factor = 1.0;
  bool grid_verified = true;
  bool kappa_certified = true;
};

ContractionCertificate make_certificate(const Assumption1Report& bounds, const HessianBounds& hess,
                                        double r_lo, double gamma);

struct Corollary1Result {
  bool holds = false;
  /// min over samples of (q̲ − 2γp̄) − λ_max(ÃP + PÃᵀ).
  double worst_margin = 0.0;
  double worst_time = 0.0;
};

/// Samples λ_max(Ã(z,t)P(t) + P(t)Ã(z,t)ᵀ) ≤ q̲ − 2γp̄ over every recorded time
/// (strided) and every sample state. Throws PreconditionError if C̃ ≠ 0 at a sample.
Corollary1Result corollary1_check(const SystemModel& model, const FilterTrajectory& traj,
                                  const Mat& Q, const std::vector<Vec>& sample_states,
                                  double gamma, std::size_t time_stride = 1);

struct Table1Params {
  double p_lo = 1.0;
  double p_hi = 1.0;
  double q_lo = 1.0;
  double r_lo = 1.0;
  std::optional<double> c_hi;
  double kappa_A = 1.0;
  double kappa_C = 1.0;
};

struct Table1Row {
  std::string label;
  double rate = 0.0;
  double basin_kappa_C_zero = 0.0;
  /// Empty for the Lyapunov row when no bound on ‖C(t)‖ is supplied.
  std::optional<double> basin_kappa_A_zero;
};

struct Table1 {
  Table1Row lyapunov;
  Table1Row contraction;
};

/// Rate and basin formulas of the Lyapunov-based analysis next to the
/// contraction-based ones. Only the Lyapunov κ_A = 0 basin uses c̄.
Table1 table1_compare(const Table1Params& params);

/// Checks (M − 2N) + 2(γ + n̲/p̄)P ⪯ 0 with n̲ = λ_min(N), p̄ = λ_max(P).
/// Guaranteed true whenever M + 2γP ⪯ 0.
bool inflation_rate_gain(const Mat& M, const Mat& P, const Mat& N, double gamma);

}  // namespace ekfc
