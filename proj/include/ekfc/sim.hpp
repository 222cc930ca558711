#pragma once

#include "ekfc/contraction.hpp"
#include "ekfc/ekf.hpp"
#include "ekfc/model.hpp"
#include "ekfc/signal.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ekfc {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;

  VectorSignal signal() const { return VectorSignal(times, states); }
};

struct TruthRun {
  Trajectory trajectory;
  /// y_m(t) = h(x(t), t) sampled on the truth grid.
  VectorSignal measurements;
};

/// RK4 trajectory of x' = f(x, t) and its output samples.
TruthRun integrate_truth(const SystemModel& model, const Vec& x0, double horizon, double step);

/// Truth simulated at half the filter step, so every RK4 stage time of a
/// filter or virtual-system step lands on a measurement sample.
TruthRun integrate_truth_for_filter(const SystemModel& model, const Vec& x0, double horizon,
                                    double filter_step);

struct Disturbance {
  std::function<Vec(const Vec& x, double t)> b;
  double b_max = 0.0;

  static Disturbance none(int state_dim);
  static Disturbance constant(const Vec& value);
};

/// RK4 trajectory of z' = f(z,t) − K(t)(h(z,t) − y_m(t)) [+ b(z,t)], with K and
/// y_m linearly interpolated between their grid points.
Trajectory integrate_virtual(const SystemModel& model, const MatrixSignal& gains,
                             const VectorSignal& measurements, const Vec& z0, double horizon,
                             double step, const Disturbance* disturbance = nullptr);

/// Least-squares exponential rate −d/dt log(v) over [t0 + lo·T, t0 + hi·T],
/// ignoring values below `floor`. NaN when fewer than two samples qualify.
double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                      double window_lo = 0.1, double window_hi = 0.9, double floor = 1e-12);

/// (a − b)ᵀ P⁻¹ (a − b).
double weighted_sq_distance(const Vec& a, const Vec& b, const Mat& P);

struct ExperimentRun {
  std::vector<double> times;
  /// Empty unless the caller fills it; the runs only see y_m.
  std::vector<Vec> truth;
  std::vector<Vec> measurements;
  std::vector<Trajectory> virtual_trajs;
  /// δᵀP(t)⁻¹δ for the designated pair.
  std::vector<double> weighted_dist;
  /// ‖δ‖ for the designated pair.
  std::vector<double> euclid_dist;
  /// Fitted decay rate of weighted_dist (squared length).
  double fitted_rate = 0.0;
  /// All initial points satisfied the basin test, when one was requested.
  bool in_basin = true;
};

/// Two virtual trajectories driven by the filter's gain schedule, with the
/// weighted squared distance between them at every filter grid time. When a
/// certificate is given, each initial point is tested against
/// (z − x̂(0))ᵀP(0)⁻¹(z − x̂(0)) ≤ ρ²/p̄ and the result recorded in `in_basin`.
ExperimentRun twin_decay(const SystemModel& model, const FilterTrajectory& filter,
                         const VectorSignal& measurements, const Vec& z1_0, const Vec& z2_0,
                         double horizon, const ContractionCertificate* certificate = nullptr);

struct EnvelopeResult {
  std::vector<double> times;
  std::vector<double> error;
  std::vector<double> envelope;
  /// envelope − error.
  std::vector<double> margin;
  double worst_margin = 0.0;
  bool initial_in_basin = true;
  /// worst_margin ≥ −abs_tol.
  bool pass = false;
};

/// Compares ‖x̂(t) − x(t)‖ against √(p̄/p̲)·‖x̂(0) − x(0)‖·e^(−γt) on the filter grid.
EnvelopeResult envelope_check(const FilterTrajectory& filter, const Trajectory& truth,
                              const ContractionCertificate& certificate, double abs_tol = 1e-9);

struct PerturbedResult {
  ExperimentRun run;
  /// sup ‖z(t) − x̂(t)‖ over the trailing third of the horizon.
  double steady_radius = 0.0;
  /// √(p̄/p̲)·γ·‖b‖_max.
  double radius_gamma_times_b = 0.0;
  /// √(p̄/p̲)·‖b‖_max/γ.
  double radius_b_over_gamma = 0.0;
};

PerturbedResult perturbed_run(const SystemModel& model, const FilterTrajectory& filter,
                              const VectorSignal& measurements, const Disturbance& disturbance,
                              const Vec& z0, double horizon,
                              const ContractionCertificate& certificate);

struct VariationalReport {
  std::vector<double> times;
  /// Central difference of δzᵀP⁻¹δz.
  std::vector<double> lhs;
  /// δzᵀP⁻¹ M P⁻¹ δz (with the inflation terms of the filter included).
  std::vector<double> rhs;
  double max_rel_deviation = 0.0;
};

/// Propagates δz along δz' = (A(z,t) − K(t)C(z,t))δz next to the virtual
/// trajectory z and compares the two sides of the metric derivative identity
/// at interior grid points.
VariationalReport variational_validator(const SystemModel& model, const FilterTrajectory& filter,
                                        const FilterConfig& config,
                                        const VectorSignal& measurements, const Vec& z0,
                                        const Vec& dz0, double horizon);

}  // namespace ekfc
