#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core/hamiltonian.hpp"
#include "core/linalg.hpp"
#include "core/quadrature.hpp"

namespace ritherm {

// alpha~^2 = alpha^2 t^2 / (dim + 1) with dim = 2 dim_S for the qubit ancilla.
double rescaled_coupling_sq(double alpha, double t, std::size_t dim_s);

// How |Delta -/+ gamma| == delta_min is routed. Exclusive sends exact ties to the off-resonance part.
enum class TiePolicy { Exclusive, Inclusive };

// <j| T(|i><i|) |j> for i != j, all three sinc^2 terms (zero-based indices).
double transition_element(const Hamiltonian& h, std::size_t i, std::size_t j, double beta, double gamma, double alpha,
                          double t);

struct ResonanceSplit {
  RealMatrix on;
  RealMatrix off;
  double delta_min = 0.0;
};

ResonanceSplit split_resonance(const Hamiltonian& h, double beta, double gamma, double alpha, double t,
                               double delta_min, TiePolicy ties = TiePolicy::Exclusive);

struct GeneratorMetadata {
  double alpha = 0.0;
  double t = 0.0;
  double beta = 0.0;
  std::string gamma_description;
  double rescale = 1.0;  // multiply T by this before reading the rescaled gap
  std::string rescale_kind;
  std::vector<std::string> warnings;
};

struct TransitionGenerator {
  RealMatrix T;
  GeneratorMetadata meta;

  std::size_t dim() const { return static_cast<std::size_t>(T.rows()); }
  RealMatrix markov() const { return RealMatrix::Identity(T.rows(), T.cols()) + T; }
  RealMatrix rescaled() const { return meta.rescale * T; }
  double max_column_sum_error() const { return T.colwise().sum().cwiseAbs().maxCoeff(); }
};

// On-resonance generator for a fixed ancilla gap.
TransitionGenerator build_T(const Hamiltonian& h, double beta, double gamma, double alpha, double t,
                            TiePolicy ties = TiePolicy::Exclusive);
// On- plus off-resonance second-order generator for a fixed ancilla gap.
TransitionGenerator build_full_T(const Hamiltonian& h, double beta, double gamma, double alpha, double t);

struct UniformWindow {
  double lo = 0.0;
  double hi = -1.0;  // negative selects 4 ||H_S||
};
struct PerfectKnowledge {};
struct EmpiricalSamples {
  std::vector<double> gammas;
};
using ExpectationMode = std::variant<UniformWindow, PerfectKnowledge, EmpiricalSamples>;

TransitionGenerator build_expected_T(const Hamiltonian& h, double beta, double alpha, double t,
                                     const ExpectationMode& mode, TiePolicy ties = TiePolicy::Exclusive,
                                     double rel_tol = 1e-12);

// Integral over u in [-delta_min t/2, delta_min t/2] of sinc^2(u) times the ancilla weight at gamma = delta - 2u/t
// (q0 for cooling, q1 for heating), restricted to gamma in [lo, hi].
double zero_knowledge_integral(double delta, double beta, double t, double delta_min, bool heating, double lo,
                               double hi, double rel_tol = 1e-12);

// Unique stationary vector of I+T; throws NonErgodic when the kernel of T is not one-dimensional.
RealVector fixed_point(const TransitionGenerator& gen);
std::size_t kernel_dimension(const RealMatrix& T);

struct GapReport {
  double absolute_gap = 0.0;  // 1 - max nontrivial |eigenvalue| of I+T
  double rescaled_gap = 0.0;  // min nontrivial -Re(mu) over eigenvalues mu of rescale * T
  std::vector<Complex> markov_eigenvalues;
  std::vector<Complex> rescaled_eigenvalues;
  bool triangular = false;
};

GapReport spectral_gap(const RealMatrix& T, double rescale);
inline GapReport spectral_gap(const TransitionGenerator& gen) { return spectral_gap(gen.T, gen.meta.rescale); }

RealVector markov_evolve(const RealMatrix& T, const RealVector& p0, std::uint64_t steps);

double detailed_balance_residual(const RealMatrix& T, const RealVector& p);

struct JerisonBound {
  std::uint64_t steps = 0;
  double bound = 0.0;   // before the ceiling
  double j_term = 0.0;  // 2 log(1/lambda) + 4(1 + log 2) + (2 log(1/eps) - 1) / N
  bool saturated = false;  // bound exceeds the uint64 range; steps holds the maximum
};

JerisonBound jerison_steps(std::size_t states, double gap, double epsilon);

struct ErrorBudget {
  double markov_epsilon = 0.0;
  double off_resonance_bound = 0.0;  // per interaction
  double remainder_bound = 0.0;      // per interaction
  double fixed_point_residual = 0.0;
  std::uint64_t steps = 0;
  double accumulated = 0.0;  // steps * (off_resonance_bound + remainder_bound)

  double total() const { return markov_epsilon + fixed_point_residual + accumulated; }
};

ErrorBudget error_budget(double alpha, double t, std::size_t dim_s, double delta_min, std::uint64_t steps,
                         double markov_epsilon = 0.0, double fixed_point_residual = 0.0);

// 16 sqrt(2/pi) dim_S (alpha t)^3
double remainder_bound(double alpha, double t, std::size_t dim_s);
// 8 alpha^2 / delta_min^2
double off_resonance_bound(double alpha, double delta_min);
// alpha^2 t e^{beta delta_min} pi / ||H_S||
double zero_knowledge_residual_bound(double alpha, double t, double beta, double delta_min, double norm);

nlohmann::json generator_to_json(const TransitionGenerator& gen);
nlohmann::json budget_to_json(const ErrorBudget& b);

}  // namespace ritherm
