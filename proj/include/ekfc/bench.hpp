#pragma once

#include "ekfc/ekf.hpp"
#include "ekfc/model.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ekfc {

using ParamMap = std::map<std::string, double>;

/// Closed-form facts about a benchmark, used as test oracles.
struct AnalyticData {
  /// Riccati equilibrium for the entry's default Q and R.
  std::optional<Mat> P_eq;
  std::optional<Mat> K_eq;
  /// Exponential decay rate of the estimation error at equilibrium.
  std::optional<double> error_rate;
  /// Hessian bounds valid on the ball of radius alpha around `kappa_center`.
  std::optional<HessianBounds> kappa;
  std::optional<Vec> kappa_center;
};

struct BenchmarkEntry {
  std::string name;
  /// Which analytical result the system is meant to exercise.
  std::string exercises;
  ParamMap params;
  SystemModel model;
  FilterConfig default_filter;
  Vec x0;
  double horizon = 10.0;
  AnalyticData analytic;
};

using BenchmarkFactory = std::function<BenchmarkEntry(const ParamMap& params)>;

/// Built-in families: scalar-riccati, ltv-linear, vanderpol-pos, cubic-scalar.
/// Unknown parameter names are rejected; missing ones take defaults.
BenchmarkEntry make_benchmark(const std::string& name, const ParamMap& params = {});

/// Default-parameter instance of every registered family.
std::vector<BenchmarkEntry> registry();

std::vector<std::string> benchmark_names();

/// Adds or replaces a family.
void register_benchmark(const std::string& name, BenchmarkFactory factory);

}  // namespace ekfc
