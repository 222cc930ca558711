#include "ekfc/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ekfc {

Mat contraction_matrix(const SystemModel& model, const Vec& z, const Vec& xhat, const Mat& P,
                       const Mat& Q, const Mat& R, double t) {
  const Jacobians at_z = eval_jacobians(model, z, t);
  const Jacobians at_xhat = eval_jacobians(model, xhat, t);
  return contraction_matrix(P, Q, R, at_z.A - at_xhat.A, at_z.C - at_xhat.C, at_z.C);
}

double lemma1_margin(const SystemModel& model, const Vec& z, const Vec& xhat, const Mat& P,
                     const Mat& Q, const Mat& R, double gamma, double t) {
  return lambda_max(contraction_matrix(model, z, xhat, P, Q, R, t) + 2.0 * gamma * P);
}

bool check_lemma1(const SystemModel& model, const Vec& z, const Vec& xhat, const Mat& P,
                  const Mat& Q, const Mat& R, double gamma, double t) {
  const Mat S = contraction_matrix(model, z, xhat, P, Q, R, t) + 2.0 * gamma * P;
  return is_negative_semidefinite(S);
}

double empirical_radius(const SystemModel& model, const Vec& xhat, const Mat& P, const Mat& Q,
                        const Mat& R, double gamma, double t, const RadiusOptions& options) {
  if (!check_lemma1(model, xhat, xhat, P, Q, R, gamma, t)) return 0.0;
  const auto dirs = sample_unit_directions(static_cast<int>(xhat.size()),
                                           options.random_directions, options.seed);
  auto holds = [&](double r) {
    for (const Vec& u : dirs) {
      if (!check_lemma1(model, xhat + r * u, xhat, P, Q, R, gamma, t)) return false;
    }
    return true;
  };
  auto holds_safely = [&](double r) {
    try {
      return holds(r);
    } catch (const EvaluationError&) {
      return false;
    }
  };

  double lo = 0.0;
  double hi = std::min(1.0, options.max_radius);
  while (holds_safely(hi)) {
    lo = hi;
    if (hi >= options.max_radius) return options.max_radius;
    hi = std::min(2.0 * hi, options.max_radius);
  }
  while (hi - lo > options.rel_tol * std::max(hi, 1e-300)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (holds_safely(mid) ? lo : hi) = mid;
  }
  return lo;
}

double gamma_cap(double q_lo, double p_hi) { return q_lo / (2.0 * p_hi); }
double default_gamma(double q_lo, double p_hi) { return q_lo / (4.0 * p_hi); }

double zeta_plus(double kappa_A, double kappa_C, double p_hi, double q_lo, double r_lo,
                 double gamma) {
  if (!(p_hi > 0) || !(q_lo > 0) || !(r_lo > 0)) {
    throw ConfigError("zeta_plus: p_hi, q_lo and r_lo must be positive");
  }
  if (!(kappa_A >= 0) || !(kappa_C >= 0) || !(gamma >= 0)) {
    throw ConfigError("zeta_plus: kappas and gamma must be nonnegative");
  }
  double slack = q_lo - 2.0 * gamma * p_hi;
  if (slack < 0) {
    if (slack < -1e-12 * q_lo) throw ConfigError("zeta_plus: gamma exceeds q_lo/(2 p_hi)");
    slack = 0.0;
  }
  const double quad = p_hi * p_hi * kappa_C * kappa_C / r_lo;
  const double lin = 2.0 * p_hi * kappa_A;
  if (quad == 0.0) {
    if (lin == 0.0) return std::numeric_limits<double>::infinity();
    return slack / lin;
  }
  // Cancellation-free form of (−b + √(b² + 4ac)) / (2a).
  return 2.0 * slack / (lin + std::sqrt(lin * lin + 4.0 * quad * slack));
}

ContractionCertificate make_certificate(const Assumption1Report& bounds, const HessianBounds& hess,
                                        double r_lo, double gamma) {
  if (!(bounds.p_lo > 0)) {
    throw PreconditionError("certification refused: lower bound of P is not positive");
  }
  hess.validate();
  const double cap = gamma_cap(bounds.q_lo, bounds.p_hi);
  if (!(gamma >= 0) || gamma > cap * (1.0 + 1e-12)) {
    throw ConfigError("gamma must lie in [0, q_lo/(2 p_hi)] = [0, " + std::to_string(cap) + "]");
  }
  ContractionCertificate c;
  c.gamma = gamma;
  c.alpha = hess.alpha;
  c.kappa_A = hess.kappa_A;
  c.kappa_C = hess.kappa_C;
  c.p_lo = bounds.p_lo;
  c.p_hi = bounds.p_hi;
  c.q_lo = bounds.q_lo;
  c.r_lo = r_lo;
  c.zeta_plus = zeta_plus(hess.kappa_A, hess.kappa_C, bounds.p_hi, bounds.q_lo, r_lo, gamma);
  c.rho = std::min(hess.alpha, c.zeta_plus);
  c.basin_euclid = c.rho * std::sqrt(bounds.p_lo / bounds.p_hi);
  c.envelope_factor = std::sqrt(bounds.p_hi / bounds.p_lo);
  c.grid_verified = bounds.grid_verified;
  c.kappa_certified = hess.certified;
  return c;
}

Corollary1Result corollary1_check(const SystemModel& model, const FilterTrajectory& traj,
                                  const Mat& Q, const std::vector<Vec>& sample_states,
                                  double gamma, std::size_t time_stride) {
  if (traj.size() == 0) throw ConfigError("corollary1_check: empty trajectory");
  const double rhs = lambda_min(Q) - 2.0 * gamma * traj.p_max;
  Corollary1Result out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  time_stride = std::max<std::size_t>(1, time_stride);

  auto visit = [&](std::size_t i, const Vec& z) {
    const double t = traj.times[i];
    const TildeMatrices tilde = tilde_matrices(model, z, traj.xhat[i], t);
    const double c_scale = 1.0 + jacobian_C(model, z, t).norm();
    if (tilde.C.norm() > 1e-12 * c_scale) {
      throw PreconditionError("corollary1_check: output map is not linear (C tilde nonzero)");
    }
    const Mat AP = tilde.A * traj.P[i];
    const double margin = rhs - lambda_max(AP + AP.transpose());
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_time = t;
    }
  };

  for (std::size_t i = 0; i < traj.size(); i += time_stride) {
    visit(i, traj.xhat[i]);
    for (const Vec& z : sample_states) visit(i, z);
  }
  out.holds = out.worst_margin >= 0.0;
  return out;
}

Table1 table1_compare(const Table1Params& prm) {
  const double ratio = prm.p_lo / prm.p_hi;
  const double inf = std::numeric_limits<double>::infinity();
  const double kc0 = prm.kappa_A > 0 ? prm.q_lo / (4.0 * prm.kappa_A * prm.p_hi) : inf;

  Table1 out;
  out.lyapunov.label = "Lyapunov";
  out.lyapunov.rate = prm.q_lo * prm.p_lo / (4.0 * prm.p_hi * prm.p_hi);
  out.lyapunov.basin_kappa_C_zero = ratio * kc0;
  if (prm.c_hi) {
    out.lyapunov.basin_kappa_A_zero =
        prm.kappa_C > 0 ? prm.q_lo * prm.r_lo /
                              (4.0 * *prm.c_hi * prm.kappa_C * prm.p_hi * prm.p_hi)
                        : inf;
  }

  out.contraction.label = "Contraction";
  out.contraction.rate = prm.q_lo / (4.0 * prm.p_hi);
  out.contraction.basin_kappa_C_zero = std::sqrt(ratio) * kc0;
  out.contraction.basin_kappa_A_zero =
      prm.kappa_C > 0 ? std::sqrt(prm.q_lo * prm.p_lo * prm.r_lo) /
                            (prm.kappa_C * std::pow(prm.p_hi, 1.5) * std::sqrt(2.0))
                      : inf;
  return out;
}

bool inflation_rate_gain(const Mat& M, const Mat& P, const Mat& N, double gamma) {
  const double n_lo = lambda_min(N);
  const double p_hi = lambda_max(P);
  const Mat S = (M - 2.0 * N) + 2.0 * (gamma + n_lo / p_hi) * P;
  return is_negative_semidefinite(S);
}

}  // namespace ekfc
