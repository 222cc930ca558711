#pragma once

#include "ekfc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ekfc {

/// Piecewise-linear signal over an increasing time grid. `Value` is any
/// Eigen dense type; all samples share one shape.
template <typename Value>
class SampledSignal {
 public:
  SampledSignal() = default;
  SampledSignal(std::vector<double> times, std::vector<Value> values)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() != values_.size() || times_.empty()) {
      throw ConfigError("SampledSignal: times and values must be nonempty and equal length");
    }
    if (!std::is_sorted(times_.begin(), times_.end()) ||
        std::adjacent_find(times_.begin(), times_.end()) != times_.end()) {
      throw ConfigError("SampledSignal: time grid must be strictly increasing");
    }
  }

  double start() const { return times_.front(); }
  double end() const { return times_.back(); }
  bool covers(double t0, double t1) const {
    const double slack = 1e-9 * (1.0 + std::abs(end()));
    return !times_.empty() && start() <= t0 + slack && t1 <= end() + slack;
  }

  /// Linear interpolation; clamps to the end samples outside the grid.
  Value operator()(double t) const {
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    if (w == 0.0) return values_[lo];
    return ((1.0 - w) * values_[lo] + w * values_[hi]).eval();
  }

  const std::vector<double>& times() const { return times_; }
  const std::vector<Value>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<Value> values_;
};

using VectorSignal = SampledSignal<Vec>;
using MatrixSignal = SampledSignal<Mat>;

/// Number of fixed steps covering `horizon` with step at most `step`.
inline std::size_t step_count(double horizon, double step) {
  if (!(horizon > 0) || !(step > 0)) throw ConfigError("horizon and step must be positive");
  const double raw = horizon / step;
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) <= 1e-9 * std::max(1.0, raw)) {
    return static_cast<std::size_t>(std::max(1.0, rounded));
  }
  return static_cast<std::size_t>(std::ceil(raw));
}

}  // namespace ekfc
