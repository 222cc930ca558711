#include "ekfc/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ekfc {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what, double t) {
  if (!m.allFinite()) {
    throw EvaluationError(std::string(what) + " returned a non-finite value at t=" +
                          std::to_string(t));
  }
}

}  // namespace

Vec SystemModel::f(const Vec& x, double t) const {
  Vec out = dynamics(x, t);
  require_finite(out, "dynamics", t);
  return out;
}

Vec SystemModel::h(const Vec& x, double t) const {
  Vec out = output(x, t);
  require_finite(out, "output map", t);
  return out;
}

void HessianBounds::validate() const {
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  if (!(kappa_A >= 0) || !(kappa_C >= 0)) throw ConfigError("kappa bounds must be nonnegative");
}

double fd_step(const Vec& x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, x.norm());
}

Mat fd_jacobian(const VectorField& field, const Vec& x, double t) {
  const double step = fd_step(x);
  const Vec f0 = field(x, t);
  Mat J(f0.size(), x.size());
  Vec xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    xp(k) = x(k) + step;
    const Vec fp = field(xp, t);
    xp(k) = x(k) - step;
    const Vec fm = field(xp, t);
    xp(k) = x(k);
    J.col(k) = (fp - fm) / (2.0 * step);
  }
  return J;
}

Mat jacobian_A(const SystemModel& model, const Vec& x, double t) {
  if (!x.allFinite()) throw EvaluationError("jacobian_A: non-finite state");
  Mat A = model.jacobian_A ? model.jacobian_A(x, t) : fd_jacobian(model.dynamics, x, t);
  require_finite(A, "jacobian A", t);
  return A;
}

Mat jacobian_C(const SystemModel& model, const Vec& x, double t) {
  if (!x.allFinite()) throw EvaluationError("jacobian_C: non-finite state");
  Mat C = model.jacobian_C ? model.jacobian_C(x, t) : fd_jacobian(model.output, x, t);
  require_finite(C, "jacobian C", t);
  return C;
}

Jacobians eval_jacobians(const SystemModel& model, const Vec& x, double t) {
  return {jacobian_A(model, x, t), jacobian_C(model, x, t)};
}

TildeMatrices tilde_matrices(const SystemModel& model, const Vec& z, const Vec& xhat, double t) {
  const Jacobians at_z = eval_jacobians(model, z, t);
  const Jacobians at_xhat = eval_jacobians(model, xhat, t);
  return {at_z.A - at_xhat.A, at_z.C - at_xhat.C};
}

std::vector<Mat> hessian_slices(const MatrixField& jacobian, const Vec& x, double t, int out_dim) {
  const Eigen::Index n = x.size();
  std::vector<Mat> slices(out_dim, Mat::Zero(n, n));
  const double step = fd_step(x);
  Vec xp = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    xp(k) = x(k) + step;
    const Mat Jp = jacobian(xp, t);
    xp(k) = x(k) - step;
    const Mat Jm = jacobian(xp, t);
    xp(k) = x(k);
    const Mat dJ = (Jp - Jm) / (2.0 * step);
    require_finite(dJ, "hessian sample", t);
    for (int i = 0; i < out_dim; ++i) slices[i].col(k) = dJ.row(i).transpose();
  }
  for (auto& s : slices) s = symmetrized(s);
  return slices;
}

std::vector<Vec> sample_unit_directions(int dim, int count, std::uint64_t seed) {
  std::vector<Vec> dirs;
  dirs.reserve(2 * dim + count);
  for (int i = 0; i < dim; ++i) {
    dirs.push_back(Vec::Unit(dim, i));
    dirs.push_back(-Vec::Unit(dim, i));
  }
  if (dim <= 1) return dirs;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < count; ++c) {
    Vec u(dim);
    for (int i = 0; i < dim; ++i) u(i) = gauss(rng);
    const double nrm = u.norm();
    if (nrm > 0) dirs.push_back(u / nrm);
  }
  return dirs;
}

double tensor_norm(const std::vector<Mat>& slices, int extra_directions, std::uint64_t seed) {
  if (slices.empty()) return 0.0;
  if (slices.size() == 1) return spectral_norm(slices.front());
  const int m = static_cast<int>(slices.size());
  double best = 0.0;
  for (const Vec& w : sample_unit_directions(m, extra_directions, seed)) {
    Mat combo = Mat::Zero(slices.front().rows(), slices.front().cols());
    for (int i = 0; i < m; ++i) combo += w(i) * slices[i];
    best = std::max(best, spectral_norm(combo));
  }
  return best;
}

HessianBounds estimate_hessian_bounds(const SystemModel& model,
                                      const std::vector<std::pair<Vec, double>>& center_path,
                                      double radius, const HessianEstimateOptions& options) {
  if (!(radius > 0)) throw ConfigError("estimate_hessian_bounds: radius must be positive");
  if (center_path.empty()) throw ConfigError("estimate_hessian_bounds: empty path");

  const MatrixField jac_A = [&](const Vec& x, double t) { return jacobian_A(model, x, t); };
  const MatrixField jac_C = [&](const Vec& x, double t) { return jacobian_C(model, x, t); };

  const auto dirs = sample_unit_directions(model.state_dim, options.random_directions, options.seed);
  const std::size_t stride =
      std::max<std::size_t>(1, (center_path.size() + options.max_centers - 1) /
                                   static_cast<std::size_t>(std::max(1, options.max_centers)));
  const double finite_radius = std::isfinite(radius) ? radius : 1.0;

  double kA = 0.0, kC = 0.0;
  auto visit = [&](const Vec& x, double t) {
    kA = std::max(kA, tensor_norm(hessian_slices(jac_A, x, t, model.state_dim)));
    kC = std::max(kC, tensor_norm(hessian_slices(jac_C, x, t, model.output_dim)));
  };

  auto sweep = [&](const Vec& center, double t) {
    visit(center, t);
    for (int level = 1; level <= options.radial_levels; ++level) {
      const double r = finite_radius * level / options.radial_levels;
      for (const Vec& u : dirs) visit(center + r * u, t);
    }
  };

  for (std::size_t idx = 0; idx < center_path.size(); idx += stride) {
    sweep(center_path[idx].first, center_path[idx].second);
  }
  if ((center_path.size() - 1) % stride != 0) {
    sweep(center_path.back().first, center_path.back().second);
  }

  HessianBounds out;
  out.alpha = radius;
  out.kappa_A = options.safety_factor * kA;
  out.kappa_C = options.safety_factor * kC;
  out.certified = false;
  return out;
}

}  // namespace ekfc
