#pragma once

#include <Eigen/Core>

namespace ekfc {

/// One classical fourth-order Runge-Kutta step of y' = rhs(t, y).
/// `State` is any Eigen dense type (vector or matrix).
template <typename State, typename Rhs>
State rk4_step(const Rhs& rhs, double t, const State& y, double h) {
  const State k1 = rhs(t, y);
  const State k2 = rhs(t + 0.5 * h, (y + 0.5 * h * k1).eval());
  const State k3 = rhs(t + 0.5 * h, (y + 0.5 * h * k2).eval());
  const State k4 = rhs(t + h, (y + h * k3).eval());
  return (y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
}

}  // namespace ekfc
