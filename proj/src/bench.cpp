#include "ekfc/bench.hpp"

#include <cmath>
#include <mutex>

namespace ekfc {

namespace {

ParamMap resolve(const std::string& family, const ParamMap& defaults, const ParamMap& given) {
  ParamMap out = defaults;
  for (const auto& [key, value] : given) {
    if (!defaults.count(key)) {
      throw ConfigError("benchmark '" + family + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' must be finite");
    out[key] = value;
  }
  return out;
}

Mat scalar(double v) { return Mat::Constant(1, 1, v); }
Vec scalar_vec(double v) { return Vec::Constant(1, v); }

void require_positive(const ParamMap& p, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!(p.at(k) > 0)) throw ConfigError(std::string("parameter '") + k + "' must be positive");
  }
}

// x' = 0, y = x. P∞ = √(qr), K∞ = √(q/r).
BenchmarkEntry scalar_riccati(const ParamMap& given) {
  const ParamMap p = resolve("scalar-riccati", {{"q", 1.0}, {"r", 1.0}}, given);
  require_positive(p, {"q", "r"});
  const double q = p.at("q"), r = p.at("r");

  BenchmarkEntry e;
  e.name = "scalar-riccati";
  e.exercises = "closed-form Riccati equilibrium; twin decay, envelope and perturbation ball";
  e.params = p;
  e.model.name = e.name;
  e.model.state_dim = 1;
  e.model.output_dim = 1;
  e.model.dynamics = [](const Vec& x, double) { return Vec::Zero(x.size()).eval(); };
  e.model.output = [](const Vec& x, double) { return x; };
  e.model.jacobian_A = [](const Vec&, double) { return scalar(0.0); };
  e.model.jacobian_C = [](const Vec&, double) { return scalar(1.0); };

  e.default_filter.Q = scalar(q);
  e.default_filter.R = scalar(r);
  e.default_filter.P0 = scalar(std::sqrt(q * r));
  e.default_filter.xhat0 = scalar_vec(1.1);
  e.default_filter.step = 0.005;
  e.x0 = scalar_vec(1.0);
  e.horizon = 10.0;

  e.analytic.P_eq = scalar(std::sqrt(q * r));
  e.analytic.K_eq = scalar(std::sqrt(q / r));
  e.analytic.error_rate = std::sqrt(q / r);
  e.analytic.kappa = HessianBounds{std::numeric_limits<double>::infinity(), 0.0, 0.0, true};
  e.analytic.kappa_center = scalar_vec(0.0);
  return e;
}

// Damped oscillator with a periodically modulated stiffness and a
// time-varying output row: linear, so the filter converges globally.
BenchmarkEntry ltv_linear(const ParamMap& given) {
  const ParamMap p = resolve("ltv-linear",
                             {{"a", 0.5}, {"c", 0.5}, {"w", 1.0}, {"b", 0.3}, {"q", 1.0}, {"r", 1.0}},
                             given);
  require_positive(p, {"q", "r"});
  const double a = p.at("a"), c = p.at("c"), w = p.at("w"), b = p.at("b");
  const double q = p.at("q"), r = p.at("r");

  auto A_of = [a, c, w](double t) {
    Mat A(2, 2);
    A << 0.0, 1.0, -(1.0 + a * std::sin(w * t)), -c;
    return A;
  };
  auto C_of = [b, w](double t) {
    Mat C(1, 2);
    C << 1.0, b * std::cos(w * t);
    return C;
  };

  BenchmarkEntry e;
  e.name = "ltv-linear";
  e.exercises = "linear time-varying plant: global exponential convergence";
  e.params = p;
  e.model.name = e.name;
  e.model.state_dim = 2;
  e.model.output_dim = 1;
  e.model.dynamics = [A_of](const Vec& x, double t) { return (A_of(t) * x).eval(); };
  e.model.output = [C_of](const Vec& x, double t) { return (C_of(t) * x).eval(); };
  e.model.jacobian_A = [A_of](const Vec&, double t) { return A_of(t); };
  e.model.jacobian_C = [C_of](const Vec&, double t) { return C_of(t); };

  e.default_filter.Q = q * Mat::Identity(2, 2);
  e.default_filter.R = scalar(r);
  e.default_filter.P0 = Mat::Identity(2, 2);
  e.default_filter.xhat0 = Vec::Zero(2);
  e.default_filter.step = 0.05;
  e.x0 = (Vec(2) << 0.6, 0.8).finished();
  e.horizon = 100.0;

  e.analytic.kappa = HessianBounds{std::numeric_limits<double>::infinity(), 0.0, 0.0, true};
  e.analytic.kappa_center = Vec::Zero(2);
  return e;
}

// Van der Pol oscillator observed through its position.
BenchmarkEntry vanderpol_pos(const ParamMap& given) {
  const ParamMap p = resolve("vanderpol-pos", {{"mu", 0.1}, {"q", 1.0}, {"r", 1.0}}, given);
  require_positive(p, {"q", "r"});
  const double mu = p.at("mu"), q = p.at("q"), r = p.at("r");

  BenchmarkEntry e;
  e.name = "vanderpol-pos";
  e.exercises = "nonlinear dynamics with a linear output map";
  e.params = p;
  e.model.name = e.name;
  e.model.state_dim = 2;
  e.model.output_dim = 1;
  e.model.dynamics = [mu](const Vec& x, double) {
    Vec dx(2);
    dx << x(1), mu * (1.0 - x(0) * x(0)) * x(1) - x(0);
    return dx;
  };
  e.model.output = [](const Vec& x, double) { return scalar_vec(x(0)); };
  e.model.jacobian_A = [mu](const Vec& x, double) {
    Mat A(2, 2);
    A << 0.0, 1.0, -2.0 * mu * x(0) * x(1) - 1.0, mu * (1.0 - x(0) * x(0));
    return A;
  };
  e.model.jacobian_C = [](const Vec&, double) {
    Mat C(1, 2);
    C << 1.0, 0.0;
    return C;
  };

  e.default_filter.Q = q * Mat::Identity(2, 2);
  e.default_filter.R = scalar(r);
  e.default_filter.P0 = Mat::Identity(2, 2);
  e.default_filter.xhat0 = Vec::Zero(2);
  e.default_filter.step = 0.01;
  // Small start: with mu = 0.1 the orbit stays inside |x| < 0.5 over the horizon.
  e.x0 = (Vec(2) << 0.2, 0.0).finished();
  e.horizon = 20.0;
  // Output Hessian vanishes; the dynamics Hessian is unbounded globally.
  return e;
}

// x' = −x + εx³, y = x. |f''(x)| = 6ε|x| ≤ 6εα on |x| ≤ α.
BenchmarkEntry cubic_scalar(const ParamMap& given) {
  const ParamMap p = resolve("cubic-scalar",
                             {{"eps", 0.1}, {"alpha", 1.0}, {"q", 1.0}, {"r", 1.0}}, given);
  require_positive(p, {"alpha", "q", "r"});
  if (p.at("eps") < 0) throw ConfigError("parameter 'eps' must be nonnegative");
  const double eps = p.at("eps"), alpha = p.at("alpha"), q = p.at("q"), r = p.at("r");

  BenchmarkEntry e;
  e.name = "cubic-scalar";
  e.exercises = "weak cubic nonlinearity with analytic second-derivative bound";
  e.params = p;
  e.model.name = e.name;
  e.model.state_dim = 1;
  e.model.output_dim = 1;
  e.model.dynamics = [eps](const Vec& x, double) {
    return scalar_vec(-x(0) + eps * x(0) * x(0) * x(0));
  };
  e.model.output = [](const Vec& x, double) { return x; };
  e.model.jacobian_A = [eps](const Vec& x, double) { return scalar(-1.0 + 3.0 * eps * x(0) * x(0)); };
  e.model.jacobian_C = [](const Vec&, double) { return scalar(1.0); };

  e.default_filter.Q = scalar(q);
  e.default_filter.R = scalar(r);
  e.default_filter.P0 = scalar(1.0);
  e.default_filter.xhat0 = scalar_vec(0.4);
  e.default_filter.step = 0.005;
  e.x0 = scalar_vec(0.3);
  e.horizon = 10.0;

  // Equilibrium about x = 0 where A = −1: p = r(−1 + √(1 + q/r)).
  const double p_eq = r * (-1.0 + std::sqrt(1.0 + q / r));
  e.analytic.P_eq = scalar(p_eq);
  e.analytic.K_eq = scalar(p_eq / r);
  e.analytic.error_rate = std::sqrt(1.0 + q / r);
  e.analytic.kappa = HessianBounds{alpha, 6.0 * eps * alpha, 0.0, true};
  e.analytic.kappa_center = scalar_vec(0.0);
  return e;
}

struct Registry {
  std::mutex mutex;
  std::vector<std::pair<std::string, BenchmarkFactory>> families{
      {"scalar-riccati", scalar_riccati},
      {"ltv-linear", ltv_linear},
      {"vanderpol-pos", vanderpol_pos},
      {"cubic-scalar", cubic_scalar},
  };
};

Registry& global_registry() {
  static Registry reg;
  return reg;
}

}  // namespace

BenchmarkEntry make_benchmark(const std::string& name, const ParamMap& params) {
  BenchmarkFactory factory;
  {
    Registry& reg = global_registry();
    std::lock_guard lock(reg.mutex);
    for (const auto& [key, f] : reg.families) {
      if (key == name) factory = f;
    }
  }
  if (!factory) throw ConfigError("unknown benchmark system '" + name + "'");
  return factory(params);
}

std::vector<std::string> benchmark_names() {
  Registry& reg = global_registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> names;
  for (const auto& entry : reg.families) names.push_back(entry.first);
  return names;
}

std::vector<BenchmarkEntry> registry() {
  std::vector<BenchmarkEntry> out;
  for (const auto& name : benchmark_names()) out.push_back(make_benchmark(name));
  return out;
}

void register_benchmark(const std::string& name, BenchmarkFactory factory) {
  Registry& reg = global_registry();
  std::lock_guard lock(reg.mutex);
  for (auto& entry : reg.families) {
    if (entry.first == name) {
      entry.second = std::move(factory);
      return;
    }
  }
  reg.families.emplace_back(name, std::move(factory));
}

}  // namespace ekfc
