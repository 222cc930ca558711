#include "ekfc/campaign.hpp"

#include "ekfc/sim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

namespace ekfc::campaign {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr double kFitSlack = 0.1;

double number_from_json(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError(std::string(what) + " must be a number");
}

json number_to_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.count(item.key())) {
      throw ConfigError(fmt::format("unknown key '{}' in {}", item.key(), where));
    }
  }
}

std::optional<Vec> optional_vector(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return io::vector_from_json(j.at(key));
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number_from_json(j.at(key), key);
}

struct Pipeline {
  BenchmarkEntry entry;
  TruthRun truth;
  FilterTrajectory filter;
  Assumption1Report report;
};

Pipeline run_pipeline(const CampaignConfig& c) {
  Pipeline p;
  p.entry = make_benchmark(c.system, c.params);
  p.truth = integrate_truth_for_filter(p.entry.model, c.x0, c.horizon, c.filter.step);
  p.filter = integrate_ekf(p.entry.model, c.filter, p.truth.measurements, c.horizon);
  p.report = assumption1_report(p.filter, c.filter.Q);
  return p;
}

double resolve_gamma(const CampaignConfig& c, const Assumption1Report& r) {
  const double cap = gamma_cap(r.q_lo, r.p_hi);
  const double gamma = c.gamma.value_or(default_gamma(r.q_lo, r.p_hi));
  if (!(gamma >= 0) || gamma > cap * (1.0 + 1e-12)) {
    throw ConfigError(fmt::format("gamma {} outside [0, q_lo/(2 p_hi)] = [0, {}]", gamma, cap));
  }
  return gamma;
}

HessianBounds resolve_hessian(const CampaignConfig& c, const Pipeline& p) {
  double alpha = 1.0;
  if (c.hessian.alpha) {
    alpha = *c.hessian.alpha;
  } else if (p.entry.analytic.kappa) {
    alpha = p.entry.analytic.kappa->alpha;
  }
  if (c.hessian.kappa_A && c.hessian.kappa_C) {
    HessianBounds h{alpha, *c.hessian.kappa_A, *c.hessian.kappa_C, true};
    h.validate();
    return h;
  }
  std::vector<std::pair<Vec, double>> path;
  path.reserve(p.filter.size());
  for (std::size_t i = 0; i < p.filter.size(); ++i) path.emplace_back(p.filter.xhat[i], p.filter.times[i]);
  HessianEstimateOptions opts;
  opts.safety_factor = c.hessian.safety_factor;
  opts.seed = c.seed;
  HessianBounds h = estimate_hessian_bounds(p.entry.model, path, alpha, opts);
  if (c.hessian.kappa_A) h.kappa_A = *c.hessian.kappa_A;
  if (c.hessian.kappa_C) h.kappa_C = *c.hessian.kappa_C;
  return h;
}

ContractionCertificate certify(const CampaignConfig& c, const Pipeline& p) {
  const double r_lo = lambda_min(c.filter.R);
  return make_certificate(p.report, resolve_hessian(c, p), r_lo, resolve_gamma(c, p.report));
}

json summary_base(const char* command, const CampaignConfig& c) {
  return {{"command", command}, {"config", to_json(c)}};
}

fs::path prepare_out(const fs::path& out) {
  fs::create_directories(out);
  return out;
}

/// Runs `body`; integration failures become a failure summary and exit 1.
template <typename Body>
int guarded(const char* command, const CampaignConfig& c, const fs::path& out, std::ostream& log,
            Body&& body) {
  auto fail = [&](const std::string& kind, const std::string& what, std::optional<double> t) {
    json s = summary_base(command, c);
    s["status"] = "failed";
    s["failure"] = {{"kind", kind}, {"message", what}};
    s["failure"]["time"] = t ? json(*t) : json(nullptr);
    s["pass"] = false;
    io::write_json(s, out / fmt::format("{}.json", command));
    log << command << ": " << kind << ": " << what;
    if (t) log << " (t=" << io::format_number(*t) << ")";
    log << '\n';
    return kCheckFailed;
  };
  try {
    return body();
  } catch (const Assumption1Violation& e) {
    return fail("assumption1_violation", e.what(), e.time());
  } catch (const DivergenceError& e) {
    return fail("divergence", e.what(), e.time());
  } catch (const PreconditionError& e) {
    return fail("precondition", e.what(), std::nullopt);
  } catch (const EvaluationError& e) {
    return fail("evaluation", e.what(), std::nullopt);
  }
}

std::string cell(double v) {
  if (std::isinf(v)) return "inf";
  return fmt::format("{:.6g}", v);
}

}  // namespace

static CampaignConfig load_config_impl(const json& root) {
  const json& j = root.contains("config") && root.at("config").is_object() ? root.at("config") : root;
  if (!j.is_object()) throw ConfigError("campaign config must be a JSON object");
  reject_unknown(j,
                 {"system", "filter", "x0", "horizon", "gamma", "seed", "hessian", "twin",
                  "perturb", "certify", "compare"},
                 "campaign config");

  CampaignConfig c;
  if (!j.contains("system")) throw ConfigError("campaign config needs a 'system'");
  const json& sys = j.at("system");
  if (sys.is_string()) {
    c.system = sys.get<std::string>();
  } else if (sys.is_object()) {
    reject_unknown(sys, {"name", "params"}, "system");
    if (!sys.contains("name") || !sys.at("name").is_string()) throw ConfigError("system.name must be a string");
    c.system = sys.at("name").get<std::string>();
    if (sys.contains("params")) {
      if (!sys.at("params").is_object()) throw ConfigError("system.params must be an object");
      for (const auto& item : sys.at("params").items()) {
        c.params[item.key()] = number_from_json(item.value(), "system parameter");
      }
    }
  } else {
    throw ConfigError("'system' must be a name or an object");
  }

  const BenchmarkEntry entry = make_benchmark(c.system, c.params);
  c.params = entry.params;
  const int n = entry.model.state_dim;
  const int p = entry.model.output_dim;

  c.filter = entry.default_filter;
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    reject_unknown(f, {"Q", "R", "N", "beta", "xhat0", "P0", "step"}, "filter");
    if (f.contains("Q")) c.filter.Q = io::matrix_from_json(f.at("Q"), n);
    if (f.contains("R")) c.filter.R = io::matrix_from_json(f.at("R"), p);
    if (f.contains("N") && !f.at("N").is_null()) c.filter.N = io::matrix_from_json(f.at("N"), n);
    if (f.contains("beta")) c.filter.beta = number_from_json(f.at("beta"), "beta");
    if (f.contains("xhat0")) c.filter.xhat0 = io::vector_from_json(f.at("xhat0"));
    if (f.contains("P0")) c.filter.P0 = io::matrix_from_json(f.at("P0"), n);
    if (f.contains("step")) c.filter.step = number_from_json(f.at("step"), "step");
  }
  c.filter.validate(n, p);

  c.x0 = j.contains("x0") ? io::vector_from_json(j.at("x0")) : entry.x0;
  if (c.x0.size() != n) throw ConfigError("x0 has wrong dimension");
  c.horizon = j.contains("horizon") ? number_from_json(j.at("horizon"), "horizon") : entry.horizon;
  if (!(c.horizon > 0) || !std::isfinite(c.horizon)) throw ConfigError("horizon must be positive");
  c.gamma = optional_number(j, "gamma");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }

  if (j.contains("hessian")) {
    const json& h = j.at("hessian");
    reject_unknown(h, {"alpha", "kappa_A", "kappa_C", "safety_factor"}, "hessian");
    c.hessian.alpha = optional_number(h, "alpha");
    c.hessian.kappa_A = optional_number(h, "kappa_A");
    c.hessian.kappa_C = optional_number(h, "kappa_C");
    if (auto s = optional_number(h, "safety_factor")) c.hessian.safety_factor = *s;
    if (c.hessian.alpha && !(*c.hessian.alpha > 0)) throw ConfigError("hessian.alpha must be positive");
  }
  if (j.contains("twin")) {
    const json& t = j.at("twin");
    reject_unknown(t, {"z1", "z2", "horizon"}, "twin");
    c.twin.z1 = optional_vector(t, "z1");
    c.twin.z2 = optional_vector(t, "z2");
    c.twin.horizon = optional_number(t, "horizon");
  }
  if (j.contains("perturb")) {
    const json& pj = j.at("perturb");
    reject_unknown(pj, {"b", "z0"}, "perturb");
    c.perturb.b = optional_vector(pj, "b");
    c.perturb.z0 = optional_vector(pj, "z0");
  }
  if (j.contains("certify")) {
    const json& cj = j.at("certify");
    reject_unknown(cj, {"radius_samples", "directions"}, "certify");
    if (cj.contains("radius_samples")) c.certify.radius_samples = cj.at("radius_samples").get<int>();
    if (cj.contains("directions")) c.certify.directions = cj.at("directions").get<int>();
    if (c.certify.radius_samples < 1 || c.certify.directions < 0) {
      throw ConfigError("certify.radius_samples must be ≥ 1 and directions ≥ 0");
    }
  }
  if (j.contains("compare")) {
    const json& cj = j.at("compare");
    if (!cj.is_object()) throw ConfigError("compare must be an object");
    reject_unknown(cj, {"p_lo", "p_hi", "q_lo", "r_lo", "c_hi", "kappa_A", "kappa_C"}, "compare");
    c.compare = cj;
  }
  return c;
}

CampaignConfig load_config(const json& root) {
  try {
    return load_config_impl(root);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

CampaignConfig load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return load_config(j);
}

json to_json(const CampaignConfig& c) {
  json params = json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  json filter = {{"Q", io::to_json(c.filter.Q)},
                 {"R", io::to_json(c.filter.R)},
                 {"beta", c.filter.beta},
                 {"xhat0", io::to_json(c.filter.xhat0)},
                 {"P0", io::to_json(c.filter.P0)},
                 {"step", c.filter.step}};
  filter["N"] = c.filter.N.size() ? io::to_json(c.filter.N) : json(nullptr);

  json hessian = {{"safety_factor", c.hessian.safety_factor}};
  hessian["alpha"] = c.hessian.alpha ? number_to_json(*c.hessian.alpha) : json(nullptr);
  hessian["kappa_A"] = c.hessian.kappa_A ? json(*c.hessian.kappa_A) : json(nullptr);
  hessian["kappa_C"] = c.hessian.kappa_C ? json(*c.hessian.kappa_C) : json(nullptr);

  auto opt_vec = [](const std::optional<Vec>& v) { return v ? io::to_json(*v) : json(nullptr); };
  json twin = {{"z1", opt_vec(c.twin.z1)}, {"z2", opt_vec(c.twin.z2)}};
  twin["horizon"] = c.twin.horizon ? json(*c.twin.horizon) : json(nullptr);

  json out = {{"system", {{"name", c.system}, {"params", params}}},
              {"filter", filter},
              {"x0", io::to_json(c.x0)},
              {"horizon", c.horizon},
              {"seed", c.seed},
              {"hessian", hessian},
              {"twin", twin},
              {"perturb", {{"b", opt_vec(c.perturb.b)}, {"z0", opt_vec(c.perturb.z0)}}},
              {"certify",
               {{"radius_samples", c.certify.radius_samples}, {"directions", c.certify.directions}}},
              {"compare", c.compare}};
  out["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  return out;
}

void apply_overrides(CampaignConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.beta) c.filter.beta = *o.beta;
  if (o.inflation_n) c.filter.N = io::read_matrix_file(*o.inflation_n);
  const BenchmarkEntry entry = make_benchmark(c.system, c.params);
  c.filter.validate(entry.model.state_dim, entry.model.output_dim);
}

int cmd_simulate(const CampaignConfig& c, const fs::path& out_dir, std::ostream& log) {
  const fs::path out = prepare_out(out_dir);
  return guarded("simulate", c, out, log, [&] {
    const Pipeline p = run_pipeline(c);
    io::trajectory_csv(p.filter).write(out / "trajectory.csv");

    const VectorSignal x = p.truth.trajectory.signal();
    const double e0 = (p.filter.xhat.front() - x(0.0)).norm();
    const double e1 = (p.filter.xhat.back() - x(p.filter.times.back())).norm();
    json s = summary_base("simulate", c);
    s["assumption1"] = io::to_json(p.report);
    s["failure"] = nullptr;
    s["initial_error"] = e0;
    s["final_error"] = e1;
    s["pass"] = p.report.positive;
    s["status"] = p.report.positive ? "ok" : "failed";
    io::write_json(s, out / "simulate.json");
    log << fmt::format("simulate: p_lo={} p_hi={} q_lo={} final_error={}\n",
                       io::format_number(p.report.p_lo), io::format_number(p.report.p_hi),
                       io::format_number(p.report.q_lo), io::format_number(e1));
    return p.report.positive ? kPass : kCheckFailed;
  });
}

int cmd_certify(const CampaignConfig& c, const fs::path& out_dir, std::ostream& log) {
  const fs::path out = prepare_out(out_dir);
  return guarded("certify", c, out, log, [&] {
    const Pipeline p = run_pipeline(c);
    const ContractionCertificate cert = certify(c, p);

    RadiusOptions ropts;
    ropts.random_directions = c.certify.directions;
    ropts.seed = c.seed;
    const std::size_t samples = std::min<std::size_t>(c.certify.radius_samples, p.filter.size());
    const std::size_t stride = std::max<std::size_t>(1, (p.filter.size() - 1) / std::max<std::size_t>(1, samples - 1));

    io::CsvWriter csv({"t", "r_empirical", "zeta_plus", "rho"});
    json series = json::array();
    double min_radius = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.filter.size(); i += stride) {
      const double r = empirical_radius(p.entry.model, p.filter.xhat[i], p.filter.P[i], c.filter.Q,
                                        c.filter.R, cert.gamma, p.filter.times[i], ropts);
      csv.add_row({p.filter.times[i], r, cert.zeta_plus, cert.rho});
      series.push_back({{"t", p.filter.times[i]}, {"r", r}});
      min_radius = std::min(min_radius, r);
    }
    csv.write(out / "radius.csv");

    json s = summary_base("certify", c);
    s["assumption1"] = io::to_json(p.report);
    s["certificate"] = io::to_json(cert);
    s["empirical_radius"] = series;
    s["empirical_radius_min"] = min_radius;
    s["radius_search_limit"] = ropts.max_radius;
    s["pass"] = true;
    s["status"] = "ok";
    io::write_json(s, out / "certificate.json");
    log << fmt::format("certify: gamma={} zeta_plus={} rho={} basin_euclid={} min r(t)={}\n",
                       io::format_number(cert.gamma), io::format_number(cert.zeta_plus),
                       io::format_number(cert.rho), io::format_number(cert.basin_euclid),
                       io::format_number(min_radius));
    return kPass;
  });
}

std::string render_table1(const Table1& t) {
  auto basin_a0 = [](const Table1Row& r) {
    return r.basin_kappa_A_zero ? cell(*r.basin_kappa_A_zero) : std::string("n/a");
  };
  const auto& L = t.lyapunov;
  const auto& C = t.contraction;
  std::string ratio_a0 = "n/a";
  if (L.basin_kappa_A_zero && C.basin_kappa_A_zero) {
    ratio_a0 = cell(*C.basin_kappa_A_zero / *L.basin_kappa_A_zero);
  }
  std::string out;
  out += fmt::format("{:<22}{:>16}{:>22}{:>22}\n", "", "rate", "basin (kappa_C=0)",
                     "basin (kappa_A=0)");
  out += fmt::format("{:<22}{:>16}{:>22}{:>22}\n", L.label, cell(L.rate),
                     cell(L.basin_kappa_C_zero), basin_a0(L));
  out += fmt::format("{:<22}{:>16}{:>22}{:>22}\n", C.label, cell(C.rate),
                     cell(C.basin_kappa_C_zero), basin_a0(C));
  out += fmt::format("{:<22}{:>16}{:>22}{:>22}\n", "Contraction/Lyapunov", cell(C.rate / L.rate),
                     cell(C.basin_kappa_C_zero / L.basin_kappa_C_zero), ratio_a0);
  return out;
}

int cmd_compare(const CampaignConfig& c, const fs::path& out_dir, std::ostream& log) {
  const fs::path out = prepare_out(out_dir);
  return guarded("compare", c, out, log, [&] {
    const json& cj = c.compare;
    Table1Params prm;
    const bool explicit_all = cj.contains("p_lo") && cj.contains("p_hi") && cj.contains("q_lo") &&
                              cj.contains("r_lo") && cj.contains("kappa_A") &&
                              cj.contains("kappa_C");
    if (!explicit_all) {
      const Pipeline p = run_pipeline(c);
      const HessianBounds h = resolve_hessian(c, p);
      prm.p_lo = p.report.p_lo;
      prm.p_hi = p.report.p_hi;
      prm.q_lo = p.report.q_lo;
      prm.r_lo = lambda_min(c.filter.R);
      prm.kappa_A = h.kappa_A;
      prm.kappa_C = h.kappa_C;
    }
    auto take = [&](const char* key, double& field) {
      if (cj.contains(key)) field = number_from_json(cj.at(key), key);
    };
    take("p_lo", prm.p_lo);
    take("p_hi", prm.p_hi);
    take("q_lo", prm.q_lo);
    take("r_lo", prm.r_lo);
    take("kappa_A", prm.kappa_A);
    take("kappa_C", prm.kappa_C);
    if (cj.contains("c_hi") && !cj.at("c_hi").is_null()) prm.c_hi = number_from_json(cj.at("c_hi"), "c_hi");
    for (double v : {prm.p_lo, prm.p_hi, prm.q_lo, prm.r_lo}) {
      if (!(v > 0)) throw ConfigError("compare: p_lo, p_hi, q_lo, r_lo must be positive");
    }
    if (prm.kappa_A < 0 || prm.kappa_C < 0) throw ConfigError("compare: kappas must be nonnegative");
    if (prm.c_hi && !(*prm.c_hi > 0)) throw ConfigError("compare: c_hi must be positive");

    const Table1 table = table1_compare(prm);
    const std::string text = render_table1(table);
    {
      std::ofstream txt(out / "compare.txt", std::ios::binary);
      txt << text;
    }
    json s = summary_base("compare", c);
    s["inputs"] = {{"p_lo", prm.p_lo}, {"p_hi", prm.p_hi}, {"q_lo", prm.q_lo},
                   {"r_lo", prm.r_lo}, {"kappa_A", prm.kappa_A}, {"kappa_C", prm.kappa_C}};
    s["inputs"]["c_hi"] = prm.c_hi ? json(*prm.c_hi) : json(nullptr);
    s["table"] = io::to_json(table);
    s["ratios"] = {{"rate", table.contraction.rate / table.lyapunov.rate},
                   {"basin_kappa_C_zero",
                    table.contraction.basin_kappa_C_zero / table.lyapunov.basin_kappa_C_zero}};
    s["ratios"]["basin_kappa_A_zero"] =
        table.lyapunov.basin_kappa_A_zero
            ? json(*table.contraction.basin_kappa_A_zero / *table.lyapunov.basin_kappa_A_zero)
            : json("unavailable");
    s["pass"] = true;
    s["status"] = "ok";
    io::write_json(s, out / "compare.json");
    log << text;
    return kPass;
  });
}

int cmd_twin(const CampaignConfig& c, const fs::path& out_dir, std::ostream& log) {
  const fs::path out = prepare_out(out_dir);
  return guarded("twin", c, out, log, [&] {
    const Pipeline p = run_pipeline(c);
    const ContractionCertificate cert = certify(c, p);
    const Vec z1 = c.twin.z1.value_or(c.x0);
    const Vec z2 = c.twin.z2.value_or(c.filter.xhat0);
    if (z1.size() != p.entry.model.state_dim || z2.size() != p.entry.model.state_dim) {
      throw ConfigError("twin initial states have wrong dimension");
    }
    const double horizon = c.twin.horizon.value_or(c.horizon);
    const ExperimentRun run = twin_decay(p.entry.model, p.filter, p.truth.measurements, z1, z2,
                                         horizon, &cert);

    io::CsvWriter csv({"t", "dist_w", "dist_e"});
    for (std::size_t i = 0; i < run.times.size(); ++i) {
      csv.add_row({run.times[i], run.weighted_dist[i], run.euclid_dist[i]});
    }
    csv.write(out / "twin.csv");

    const double required = 2.0 * cert.gamma * (1.0 - kFitSlack);
    const bool identical = run.weighted_dist.front() == 0.0 &&
                           *std::max_element(run.weighted_dist.begin(), run.weighted_dist.end()) == 0.0;
    const bool pass = identical || (std::isfinite(run.fitted_rate) && run.fitted_rate >= required);
    json s = summary_base("twin", c);
    s["certificate"] = io::to_json(cert);
    s["fitted_rate"] = std::isfinite(run.fitted_rate) ? json(run.fitted_rate) : json(nullptr);
    s["required_rate"] = required;
    s["in_basin"] = run.in_basin;
    s["pass"] = pass;
    s["status"] = pass ? "ok" : "failed";
    io::write_json(s, out / "twin.json");
    log << fmt::format("twin: fitted weighted-squared rate={} required={} in_basin={} -> {}\n",
                       io::format_number(run.fitted_rate), io::format_number(required),
                       run.in_basin, pass ? "pass" : "FAIL");
    return pass ? kPass : kCheckFailed;
  });
}

int cmd_perturb(const CampaignConfig& c, const fs::path& out_dir, std::ostream& log) {
  const fs::path out = prepare_out(out_dir);
  return guarded("perturb", c, out, log, [&] {
    const Pipeline p = run_pipeline(c);
    const ContractionCertificate cert = certify(c, p);
    const int n = p.entry.model.state_dim;
    const Vec b = c.perturb.b.value_or(Vec::Zero(n));
    const Vec z0 = c.perturb.z0.value_or(c.filter.xhat0);
    if (b.size() != n || z0.size() != n) throw ConfigError("perturb vectors have wrong dimension");
    const Disturbance dist = Disturbance::constant(b);
    const PerturbedResult res =
        perturbed_run(p.entry.model, p.filter, p.truth.measurements, dist, z0, c.horizon, cert);

    io::CsvWriter csv({"t", "dist_w", "dist_e"});
    for (std::size_t i = 0; i < res.run.times.size(); ++i) {
      csv.add_row({res.run.times[i], res.run.weighted_dist[i], res.run.euclid_dist[i]});
    }
    csv.write(out / "perturb.csv");

    const double tol = 1e-8;
    const bool pass = res.steady_radius <= res.radius_b_over_gamma + tol;
    json s = summary_base("perturb", c);
    s["certificate"] = io::to_json(cert);
    s["b_max"] = dist.b_max;
    s["steady_radius"] = res.steady_radius;
    s["radius_gamma_times_b"] = res.radius_gamma_times_b;
    s["radius_b_over_gamma"] = number_to_json(res.radius_b_over_gamma);
    s["within_gamma_times_b"] = res.steady_radius <= res.radius_gamma_times_b + tol;
    s["within_b_over_gamma"] = pass;
    s["pass"] = pass;
    s["status"] = pass ? "ok" : "failed";
    io::write_json(s, out / "perturb.json");
    log << fmt::format("perturb: steady radius={} gamma*b bound={} b/gamma bound={} -> {}\n",
                       io::format_number(res.steady_radius),
                       io::format_number(res.radius_gamma_times_b),
                       io::format_number(res.radius_b_over_gamma), pass ? "pass" : "FAIL");
    return pass ? kPass : kCheckFailed;
  });
}

int cmd_envelope(const CampaignConfig& c, const fs::path& out_dir, std::ostream& log) {
  const fs::path out = prepare_out(out_dir);
  return guarded("envelope", c, out, log, [&] {
    const Pipeline p = run_pipeline(c);
    const ContractionCertificate cert = certify(c, p);
    const EnvelopeResult res = envelope_check(p.filter, p.truth.trajectory, cert);

    io::CsvWriter csv({"t", "dist_e", "envelope", "margin"});
    for (std::size_t i = 0; i < res.times.size(); ++i) {
      csv.add_row({res.times[i], res.error[i], res.envelope[i], res.margin[i]});
    }
    csv.write(out / "envelope.csv");

    json s = summary_base("envelope", c);
    s["certificate"] = io::to_json(cert);
    s["worst_margin"] = res.worst_margin;
    s["initial_in_basin"] = res.initial_in_basin;
    s["pass"] = res.pass;
    s["status"] = res.pass ? "ok" : "failed";
    io::write_json(s, out / "envelope.json");
    log << fmt::format("envelope: worst margin={} initial_in_basin={} -> {}\n",
                       io::format_number(res.worst_margin), res.initial_in_basin,
                       res.pass ? "pass" : "FAIL");
    return res.pass ? kPass : kCheckFailed;
  });
}

int run_command(const std::string& command, const CampaignConfig& c, const fs::path& out,
                std::ostream& log) {
  try {
    if (command == "simulate") return cmd_simulate(c, out, log);
    if (command == "certify") return cmd_certify(c, out, log);
    if (command == "compare") return cmd_compare(c, out, log);
    if (command == "twin") return cmd_twin(c, out, log);
    if (command == "perturb") return cmd_perturb(c, out, log);
    if (command == "envelope") return cmd_envelope(c, out, log);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace ekfc::campaign
