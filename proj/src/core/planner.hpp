#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/hamiltonian.hpp"
#include "core/weak_coupling.hpp"

namespace ritherm {

struct PlanCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;  // lhs <= rhs, or |lhs - rhs| <= 1e-12 (relative) for identities
};

enum class PlanKind { SingleQubit, Harmonic, ZeroKnowledge, PerfectKnowledge };

std::string to_string(PlanKind k);
PlanKind plan_kind_from_string(const std::string& s);

struct Plan {
  PlanKind kind = PlanKind::SingleQubit;
  std::size_t dim_s = 0;
  double beta = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double t = 0.0;
  double t_upper = std::numeric_limits<double>::infinity();  // single qubit only: larger admissible root
  std::uint64_t steps = 0;
  double steps_bound = 0.0;  // real-valued step count before the ceiling
  bool saturated = false;    // steps_bound exceeds the uint64 range and steps holds the maximum
  double multiplier = 1.0;
  double lambda_tilde = 0.0;
  std::string lambda_source;  // "closed-form", "computed" or "supplied"
  double lambda_star = 0.0;   // unrescaled gap fed to the mixing bound
  std::vector<PlanCheck> checks;
  ErrorBudget budget;
  // accumulated / epsilon; constant across epsilon up to the log factor in the step count.
  double budget_ratio = 0.0;
  std::vector<std::string> warnings;

  bool valid() const;
  double total_time() const { return (saturated ? steps_bound : static_cast<double>(steps)) * t; }
};

// sigma = 0 takes the analytic limit t = 1 / (Delta sqrt(eps)).
Plan plan_single_qubit(double delta, double sigma, double beta, double epsilon, double multiplier = 1.0);
Plan plan_harmonic(std::size_t dim_s, double delta, double beta, double epsilon, double lambda_tilde,
                   double multiplier = 1.0);
// At beta = inf the gap is the closed-form sinc integral and lambda_tilde is ignored.
Plan plan_zero_knowledge(std::size_t dim_s, double norm, double delta_min, double beta, double epsilon,
                         double lambda_tilde, double multiplier = 1.0);
Plan plan_perfect_knowledge(std::size_t dim_s, double delta_min, double beta, double epsilon, double lambda_tilde,
                            double multiplier = 1.0);

// min over i > 0 of sum_{j < i} eta(i, j) (zero-based).
double perfect_knowledge_ground_gap(const SpectralProfile& sp);

struct PlanRequest {
  PlanKind kind = PlanKind::Harmonic;
  double beta = 1.0;
  double epsilon = 0.05;
  double sigma = 0.0;  // single qubit window half-width
  double multiplier = 1.0;
};

// Derives Delta, delta_min, ||H|| and the rescaled gap from h, then dispatches to the matching planner.
Plan plan_for(const Hamiltonian& h, const PlanRequest& req);

nlohmann::json plan_to_json(const Plan& p);

}  // namespace ritherm
