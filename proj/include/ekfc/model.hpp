#pragma once

#include "ekfc/linalg.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ekfc {

using VectorField = std::function<Vec(const Vec& x, double t)>;
using MatrixField = std::function<Mat(const Vec& x, double t)>;

/// Nonlinear plant  x' = f(x, t),  y = h(x, t).
///
/// Jacobians are optional. When `jacobian_A` / `jacobian_C` are empty the
/// model falls back to central finite differences.
struct SystemModel {
  std::string name;
  int state_dim = 0;
  int output_dim = 0;
  VectorField dynamics;
  VectorField output;
  MatrixField jacobian_A;
  MatrixField jacobian_C;

  Vec f(const Vec& x, double t) const;
  Vec h(const Vec& x, double t) const;
};

/// Bounds on second derivatives of f and h within `alpha` of the filter path.
struct HessianBounds {
  double alpha = std::numeric_limits<double>::infinity();
  double kappa_A = 0.0;
  double kappa_C = 0.0;
  /// False when the kappas come from sampling rather than analysis.
  bool certified = true;

  void validate() const;
};

struct Jacobians {
  Mat A;
  Mat C;
};

/// Finite-difference step used for Jacobians: cbrt(eps)·max(1, ‖x‖).
double fd_step(const Vec& x);

/// Central-difference Jacobian of a vector field.
Mat fd_jacobian(const VectorField& field, const Vec& x, double t);

Mat jacobian_A(const SystemModel& model, const Vec& x, double t);
Mat jacobian_C(const SystemModel& model, const Vec& x, double t);
Jacobians eval_jacobians(const SystemModel& model, const Vec& x, double t);

struct TildeMatrices {
  Mat A;  // A(z,t) - A(xhat,t)
  Mat C;  // C(z,t) - C(xhat,t)
};

TildeMatrices tilde_matrices(const SystemModel& model, const Vec& z, const Vec& xhat, double t);

/// Second-derivative tensor of a vector field, one n×n symmetric slice per
/// output coordinate. Computed as a central difference of the Jacobian.
std::vector<Mat> hessian_slices(const MatrixField& jacobian, const Vec& x, double t, int out_dim);

/// Induced norm sup_{|u|=|v|=1} |T(u,v)| of a symmetric bilinear map given by
/// its slices. Exact for a single slice; otherwise maximized over the output
/// axes plus `extra_directions` random unit output directions.
double tensor_norm(const std::vector<Mat>& slices, int extra_directions = 32,
                   std::uint64_t seed = 0);

struct HessianEstimateOptions {
  /// Radial levels sampled between the center and the radius (inclusive).
  int radial_levels = 8;
  /// Random unit directions in addition to the ± coordinate axes.
  int random_directions = 16;
  /// At most this many path points are used as centers (evenly strided).
  int max_centers = 200;
  double safety_factor = 1.1;
  std::uint64_t seed = 0;
};

/// Sampled suprema of the second-derivative norms of f and h over points
/// within `radius` of the path. Not a certified bound; `certified` is false.
HessianBounds estimate_hessian_bounds(const SystemModel& model,
                                      const std::vector<std::pair<Vec, double>>& center_path,
                                      double radius, const HessianEstimateOptions& options = {});

/// Unit vectors: ± coordinate axes followed by `count` seeded random directions.
std::vector<Vec> sample_unit_directions(int dim, int count, std::uint64_t seed);

}  // namespace ekfc
