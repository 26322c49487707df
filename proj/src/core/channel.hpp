#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core/hamiltonian.hpp"
#include "core/linalg.hpp"
#include "core/random.hpp"

namespace ritherm {

struct FixedGamma {
  double gamma = 0.0;
};
struct UniformGamma {
  double lo = 0.0;
  double hi = 1.0;
};
// Negative draws are redrawn.
struct GaussianGamma {
  double mean = 0.0;
  double stddev = 1.0;
};
// A uniformly chosen pair difference plus Gaussian noise; negative draws are redrawn.
struct EigdiffGamma {
  std::vector<double> differences;
  double stddev = 0.0;
};
// Pr[gamma = value_k] proportional to weight_k.
struct PerfectKnowledgeGamma {
  std::vector<double> values;
  std::vector<double> weights;
};

using GammaPolicy = std::variant<FixedGamma, UniformGamma, GaussianGamma, EigdiffGamma, PerfectKnowledgeGamma>;

GammaPolicy eigdiff_policy(const Hamiltonian& h, double stddev);
GammaPolicy perfect_knowledge_policy(const SpectralProfile& sp);
GammaPolicy zero_knowledge_policy(const Hamiltonian& h);
double draw_gamma(const GammaPolicy& policy, Rng& rng);
std::string describe(const GammaPolicy& policy);

struct ChannelParams {
  double alpha = 0.0;
  double t = 1.0;
  double beta = 1.0;
  GammaPolicy gamma = FixedGamma{1.0};
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  // Pair each G with -G (same eigenvectors and gamma); odd orders in alpha cancel within a pair.
  bool antithetic = true;
  double eigenvalue_stddev = 1.0;
};

// Tr_E[e^{+i(H+aG)t} (rho (x) rho_E) e^{-i(H+aG)t}]; rho is expressed in the eigenbasis of H_S.
DensityMatrix apply_fixed_interaction(const Hamiltonian& h, const DensityMatrix& rho, const RandomInteraction& g,
                                      double alpha, double t, const EnvQubit& env);

struct ChannelEstimate {
  DensityMatrix mean;
  RealMatrix stderr_re;  // entrywise standard error over independent sampling units
  RealMatrix stderr_im;
  std::size_t units = 0;
};

// Mean over params.n_samples draws. Sample streams derive from (seed, interaction, unit).
ChannelEstimate apply_channel(const Hamiltonian& h, const DensityMatrix& rho, const ChannelParams& params,
                              std::uint64_t interaction = 0, bool with_stderr = false);

struct Trajectory {
  std::vector<double> distances;  // L + 1 entries, step 0 first
  DensityMatrix final_state;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
};

Trajectory iterate_channel(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params,
                           std::uint64_t steps, const DensityMatrix& target);

enum class SearchStrategy { Binary, Linear };

struct SearchOptions {
  SearchStrategy strategy = SearchStrategy::Binary;
  unsigned threads = 1;
};

struct MinInteractionsResult {
  std::optional<std::uint64_t> steps;  // empty when not reached within L_max
  double mean_distance = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> trial_distances;  // per-trial distance at the reported L (or at the last evaluated L)
  std::uint64_t evaluated_up_to = 0;
  std::optional<std::uint64_t> binary_steps;  // answer of the bracket search before verification
  bool fallback_used = false;
};

// Trial k runs with seed derive_seed(params.seed, {k}).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

MinInteractionsResult min_interactions(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params,
                                       const DensityMatrix& target, double epsilon, std::uint64_t max_steps,
                                       std::size_t trials, const SearchOptions& opts = {});

// Mean distance per step over independent trajectories of length L.
struct TrajectoryEnsemble {
  std::vector<double> mean;
  std::vector<double> stderr_mean;
  std::vector<std::vector<double>> per_trial;
};

TrajectoryEnsemble run_trajectories(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params,
                                    std::uint64_t steps, const DensityMatrix& target, std::size_t trials,
                                    unsigned threads = 1);

nlohmann::json policy_to_json(const GammaPolicy& policy);
GammaPolicy policy_from_json(const nlohmann::json& j, const Hamiltonian& h);

}  // namespace ritherm
