#pragma once

#include "ekfc/bench.hpp"
#include "ekfc/contraction.hpp"
#include "ekfc/ekf.hpp"
#include "ekfc/io.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace ekfc::campaign {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kConfigError = 2 };

struct HessianSpec {
  /// Radius of the ball around the filter path; defaults to the benchmark's
  /// analytic radius, else 1.
  std::optional<double> alpha;
  /// When both are given they are used as-is instead of the sampled estimate.
  std::optional<double> kappa_A;
  std::optional<double> kappa_C;
  double safety_factor = 1.1;
};

struct TwinSpec {
  std::optional<Vec> z1;  // default: true initial state
  std::optional<Vec> z2;  // default: filter initial estimate
  std::optional<double> horizon;
};

struct PerturbSpec {
  std::optional<Vec> b;   // constant disturbance, default zero
  std::optional<Vec> z0;  // default: filter initial estimate
};

struct CertifySpec {
  int radius_samples = 50;
  int directions = 64;
};

struct CampaignConfig {
  std::string system;
  ParamMap params;
  FilterConfig filter;
  Vec x0;
  double horizon = 0.0;
  std::optional<double> gamma;
  std::uint64_t seed = 0;
  HessianSpec hessian;
  TwinSpec twin;
  PerturbSpec perturb;
  CertifySpec certify;
  /// Explicit rate/basin comparison inputs; missing fields are filled from a simulation.
  io::json compare = io::json::object();
};

/// Parses a campaign object (or a summary file embedding one under "config"),
/// filling unspecified filter fields from the benchmark defaults and
/// validating Q, R, P0 at load time. Throws ConfigError.
CampaignConfig load_config(const io::json& j);
CampaignConfig load_config_file(const std::filesystem::path& path);

/// Fully resolved form; load_config(to_json(c)) reproduces c.
io::json to_json(const CampaignConfig& c);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<double> beta;
  std::optional<std::filesystem::path> inflation_n;
};

void apply_overrides(CampaignConfig& config, const Overrides& overrides);

int cmd_simulate(const CampaignConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_certify(const CampaignConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_compare(const CampaignConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_twin(const CampaignConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_perturb(const CampaignConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_envelope(const CampaignConfig& config, const std::filesystem::path& out, std::ostream& log);

/// Dispatches by subcommand name; maps ConfigError to kConfigError.
int run_command(const std::string& command, const CampaignConfig& config,
                const std::filesystem::path& out, std::ostream& log);

/// Aligned text rendering of both rows plus the contraction/Lyapunov ratios.
std::string render_table1(const Table1& table);

}  // namespace ekfc::campaign
