#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ekfc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Bad user input: dimensions, non-SPD design matrices, out-of-range rates.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model function returned a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an analysis routine does not hold.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration produced a non-finite state at `time`.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// The Riccati solution lost positive definiteness at `time`.
class Assumption1Violation : public std::runtime_error {
 public:
  Assumption1Violation(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

template <typename Derived>
typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return (0.5 * (m + m.transpose())).eval();
}

template <typename Derived>
typename Derived::Scalar lambda_max(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<Plain> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <typename Derived>
typename Derived::Scalar lambda_min(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<Plain> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Cholesky-based positive-definiteness test (no tolerance).
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  Eigen::LLT<Plain> llt(symmetrized(m));
  return llt.info() == Eigen::Success;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  using std::max;
  return (m - m.transpose()).norm() <= rel_tol * max(typename Derived::Scalar(1), m.norm());
}

/// Spectral norm (largest singular value).
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  using Plain = typename Derived::PlainObject;
  Eigen::JacobiSVD<Plain> svd(m);
  return svd.singularValues()(0);
}

/// Tolerance used for "⪯ 0" tests: λ_max(M) ≤ 1e-9·(1 + ‖M‖).
template <typename Derived>
typename Derived::Scalar semidefinite_tolerance(const Eigen::MatrixBase<Derived>& m) {
  return typename Derived::Scalar(1e-9) * (1 + spectral_norm(m));
}

template <typename Derived>
bool is_negative_semidefinite(const Eigen::MatrixBase<Derived>& m) {
  return lambda_max(m) <= semidefinite_tolerance(m);
}

}  // namespace ekfc
