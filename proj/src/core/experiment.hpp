#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/hamiltonian.hpp"
#include "core/serialize.hpp"

namespace ritherm {

enum class ExperimentKind {
  Trajectory,
  MinL,
  SweepT,
  SweepBeta,
  SweepEpsilon,
  SweepGammaNoise,
  ValidateWeakCoupling,
  Validate,
  HaarChecks,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);
bool is_check_kind(ExperimentKind k);

struct ChannelSpec {
  std::optional<double> alpha;
  std::optional<double> alpha_tilde_sq;  // alpha derived per grid point from alpha~^2 = alpha^2 t^2 / (2 dim_S + 1)
  double t = 1.0;
  double beta = 1.0;
  nlohmann::json gamma = {{"kind", "fixed"}};
  std::size_t n_samples = 1000;
  bool antithetic = true;
  double eigenvalue_stddev = 1.0;
};

// sweep-epsilon only. "fixed" keeps channel.t; "harmonic" uses t = dim_S / (Delta sqrt(eps lambda~)).
struct TimePolicy {
  std::string kind = "fixed";
  bool snap_to_period = false;  // round t to a whole number of periods 2 pi / Delta
};

// sweep-epsilon only. "fixed" keeps the channel coupling; "cubic" sets alpha = c / t^3.
struct CouplingPolicy {
  std::string kind = "fixed";
  std::optional<double> c;
  std::optional<double> alpha_tilde_sq_at_max_epsilon;  // fixes c instead of giving it directly
};

struct Grid {
  std::vector<double> beta, epsilon, sigma, alpha, t, alpha_tilde_sq;
};

struct Escalation {
  bool enabled = false;
  std::size_t max_trials = 1600;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::MinL;
  nlohmann::json system;
  ChannelSpec channel;
  Grid grid;
  TimePolicy t_policy;
  CouplingPolicy alpha_policy;
  double epsilon = 0.05;
  std::uint64_t steps = 100;      // trajectory length
  std::uint64_t max_steps = 100000;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out = ".";
  std::string search = "binary";
  nlohmann::json initial = "maximally-mixed";
  Escalation escalate;
  std::size_t haar_samples = 100000;
  std::size_t check_samples = 10000;
  bool checkpoint = true;
  std::filesystem::path base_dir;  // resolves relative system files; not recorded
};

// Throws Parse errors naming the offending field, e.g. "config.channel.t: must be positive".
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
// Everything needed to reproduce the run; parse_config(config_for_record(c)) yields an equivalent config.
nlohmann::json config_for_record(const ExperimentConfig& c);
std::uint64_t config_hash(const ExperimentConfig& c);

// Builders: qubit {gap}, harmonic {dim, gap}, random {dim, seed}; inline diagonal/dense; or {"file": path}.
Hamiltonian build_system(const nlohmann::json& spec, const std::filesystem::path& base_dir = {});

std::vector<std::string> sweep_columns();
std::vector<std::string> check_columns();

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;  // natural log of the prefactor
  double r2 = 0.0;
};

// Least squares of log y against log x; needs at least three strictly positive points.
PowerFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys);

struct RunOptions {
  bool write_files = true;
  std::function<void(const std::string&)> log;
};

struct ExperimentResult {
  CsvTable table{"sweep", sweep_columns()};
  nlohmann::json meta;
  bool ok = true;  // false when a check row fails
  std::filesystem::path csv_path;
  std::filesystem::path meta_path;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Analytic generator, gap, fixed point and mixing bound for {system, channel, epsilon}.
nlohmann::json markov_report(const nlohmann::json& request, const std::filesystem::path& base_dir = {});
// Plan for {system, plan: {kind, beta, epsilon, sigma, multiplier}}.
nlohmann::json plan_report(const nlohmann::json& request, const std::filesystem::path& base_dir = {});

}  // namespace ritherm
