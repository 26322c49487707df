#include "core/planner.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/quadrature.hpp"

namespace ritherm {

using nlohmann::json;

namespace {

PlanCheck identity(std::string name, double lhs, double rhs) {
  const bool ok = std::abs(lhs - rhs) <= 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return {std::move(name), lhs, rhs, ok};
}

PlanCheck at_most(std::string name, double lhs, double rhs) { return {std::move(name), lhs, rhs, lhs <= rhs}; }

void set_scaled_steps(Plan& p, double bound) {
  const double s = std::ceil(bound * p.multiplier);
  require(std::isfinite(s), "planner: step count is not finite", ErrorCode::Numerical);
  p.steps_bound = bound * p.multiplier;
  if (s >= 1.8e19) {
    p.saturated = true;
    p.steps = std::numeric_limits<std::uint64_t>::max();
    p.warnings.push_back("step count exceeds the 64-bit range; L saturated");
    return;
  }
  p.steps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(s));
}

void check_common(double epsilon, double multiplier, double beta) {
  require(epsilon > 0.0, "planner: epsilon must be positive");
  require(multiplier > 0.0, "planner: multiplier must be positive");
  require(beta >= 0.0, "planner: beta must be nonnegative");
}

void finish(Plan& p, double delta_min, double fixed_point_residual) {
  p.budget = error_budget(p.alpha, p.t, p.dim_s, delta_min, p.steps, p.epsilon, fixed_point_residual);
  if (p.saturated) p.budget.accumulated = p.steps_bound * (p.budget.off_resonance_bound + p.budget.remainder_bound);
  p.budget_ratio = p.budget.accumulated / p.epsilon;
  p.checks.push_back(at_most("alpha > 0", -p.alpha, 0.0));
  p.checks.back().holds = p.alpha > 0.0 && std::isfinite(p.alpha);
  p.checks.push_back(at_most("t > 0", -p.t, 0.0));
  p.checks.back().holds = p.t > 0.0 && std::isfinite(p.t);
}

// Mixing bound on dim_s states with step gap lambda_star, scaled by the multiplier knob.
void set_steps(Plan& p) {
  require(p.lambda_star > 0.0 && p.lambda_star <= 1.0, "planner: Markov gap outside (0, 1]", ErrorCode::Numerical);
  set_scaled_steps(p, jerison_steps(p.dim_s, p.lambda_star, p.epsilon).bound);
}

}  // namespace

std::string to_string(PlanKind k) {
  switch (k) {
    case PlanKind::SingleQubit: return "single-qubit";
    case PlanKind::Harmonic: return "harmonic";
    case PlanKind::ZeroKnowledge: return "zero-knowledge";
    case PlanKind::PerfectKnowledge: return "perfect-knowledge";
  }
  return "?";
}

PlanKind plan_kind_from_string(const std::string& s) {
  if (s == "single-qubit") return PlanKind::SingleQubit;
  if (s == "harmonic") return PlanKind::Harmonic;
  if (s == "zero-knowledge") return PlanKind::ZeroKnowledge;
  if (s == "perfect-knowledge") return PlanKind::PerfectKnowledge;
  fail(ErrorCode::Parse, "unknown plan kind '" + s + "'");
}

bool Plan::valid() const {
  return std::all_of(checks.begin(), checks.end(), [](const PlanCheck& c) { return c.holds; }) && steps >= 1;
}

Plan plan_single_qubit(double delta, double sigma, double beta, double epsilon, double multiplier) {
  check_common(epsilon, multiplier, beta);
  require(delta > 0.0, "plan_single_qubit: gap must be positive");
  require(sigma >= 0.0, "plan_single_qubit: sigma must be nonnegative");
  double temp_limit = epsilon / (2.0 * beta);
  if (beta == 0.0) temp_limit = std::numeric_limits<double>::infinity();
  if (std::isinf(beta)) temp_limit = 0.0;
  if (sigma > temp_limit)
    fail(ErrorCode::InvalidWindow, "plan_single_qubit: sigma <= eps/(2 beta) violated (" + std::to_string(sigma) +
                                       " > " + std::to_string(temp_limit) + ")");
  const double x = 2.0 * sigma * sigma / (delta * delta * epsilon);
  if (x > 1.0)
    fail(ErrorCode::InvalidWindow, "plan_single_qubit: sigma <= Delta sqrt(eps/2) violated, roots are complex");

  Plan p;
  p.kind = PlanKind::SingleQubit;
  p.dim_s = 2;
  p.beta = beta;
  p.epsilon = epsilon;
  p.multiplier = multiplier;
  p.lambda_tilde = 1.0;
  p.lambda_source = "closed-form";
  if (sigma == 0.0) {
    p.t = 1.0 / (delta * std::sqrt(epsilon));
  } else {
    const double root = std::sqrt(1.0 - x);
    // 1 - sqrt(1 - x) rewritten to avoid cancellation for small x.
    p.t = std::sqrt(x / (1.0 + root)) / sigma;
    p.t_upper = std::sqrt(1.0 + root) / sigma;
  }
  p.alpha = 1.0 / (p.t * p.t * p.t * (delta + sigma) * (delta + sigma));
  const double sinc_floor = 1.0 - sigma * sigma * p.t * p.t / 2.0;
  const double a2t2 = p.alpha * p.alpha * p.t * p.t * sinc_floor;
  p.lambda_star = a2t2 / 5.0;
  const double j = 2.0 * std::log(5.0 / a2t2) + 4.0 * (1.0 + std::log(2.0)) - 0.5 + std::log(2.0 / epsilon);
  set_scaled_steps(p, 10.0 / a2t2 * j);

  p.checks.push_back(identity("alpha t^3 (Delta + sigma)^2 = 1", p.alpha * std::pow(p.t, 3) * std::pow(delta + sigma, 2), 1.0));
  p.checks.push_back(at_most("sigma <= eps/(2 beta)", sigma, temp_limit));
  p.checks.push_back(at_most("sigma <= Delta sqrt(eps/2)", sigma, delta * std::sqrt(epsilon / 2.0)));
  const double lhs = delta * delta * p.t * p.t * sinc_floor;
  p.checks.push_back({"Delta^2 t^2 (1 - sigma^2 t^2 / 2) >= 1/eps", 1.0 / epsilon, lhs,
                      1.0 / epsilon <= lhs * (1.0 + 1e-12)});
  p.checks.push_back(at_most("t <= upper root", p.t, p.t_upper));
  finish(p, delta, beta * sigma);
  return p;
}

Plan plan_harmonic(std::size_t dim_s, double delta, double beta, double epsilon, double lambda_tilde,
                   double multiplier) {
  check_common(epsilon, multiplier, beta);
  require(dim_s >= 2, "plan_harmonic: need dim_S >= 2");
  require(delta > 0.0, "plan_harmonic: gap must be positive");
  require(lambda_tilde > 0.0, "plan_harmonic: rescaled gap must be positive");
  const double n = static_cast<double>(dim_s);
  Plan p;
  p.kind = PlanKind::Harmonic;
  p.dim_s = dim_s;
  p.beta = beta;
  p.epsilon = epsilon;
  p.multiplier = multiplier;
  p.lambda_tilde = lambda_tilde;
  p.lambda_source = "supplied";
  if (lambda_tilde > 1.0) p.warnings.push_back("rescaled gap above 1");
  const double el = epsilon * lambda_tilde;
  p.alpha = std::pow(el, 1.5) * delta / std::pow(n, 4);
  p.t = n / (delta * std::sqrt(el));
  p.lambda_star = rescaled_coupling_sq(p.alpha, p.t, dim_s) * lambda_tilde;
  set_steps(p);
  p.checks.push_back(identity("alpha dim_S Delta^2 t^3 = 1", p.alpha * n * delta * delta * std::pow(p.t, 3), 1.0));
  finish(p, delta, 0.0);
  return p;
}

Plan plan_zero_knowledge(std::size_t dim_s, double norm, double delta_min, double beta, double epsilon,
                         double lambda_tilde, double multiplier) {
  check_common(epsilon, multiplier, beta);
  require(dim_s >= 2, "plan_zero_knowledge: need dim_S >= 2");
  require(norm > 0.0 && delta_min > 0.0, "plan_zero_knowledge: need ||H|| > 0 and delta_min > 0");
  require(delta_min <= 4.0 * norm, "plan_zero_knowledge: delta_min cannot exceed 4 ||H_S||");
  require(epsilon <= 2.0, "plan_zero_knowledge: epsilon must lie in (0, 2]");
  const double n = static_cast<double>(dim_s);
  Plan p;
  p.kind = PlanKind::ZeroKnowledge;
  p.dim_s = dim_s;
  p.beta = beta;
  p.epsilon = epsilon;
  p.multiplier = multiplier;
  double residual = 0.0;
  if (std::isinf(beta)) {
    p.t = 4.0 * n * n * norm / (epsilon * delta_min * delta_min);
    p.alpha = 1.0 / (n * delta_min * delta_min * std::pow(p.t, 3));
    p.lambda_tilde = sinc_square_integral(delta_min * p.t / 2.0);
    p.lambda_source = "closed-form";
    p.checks.push_back(at_most("pi/2 <= delta_min t / 2", M_PI / 2.0, delta_min * p.t / 2.0));
    p.checks.push_back(at_most("2.43 <= I_sinc", 2.43, p.lambda_tilde));
  } else {
    require(lambda_tilde > 0.0, "plan_zero_knowledge: rescaled gap must be positive");
    p.lambda_tilde = lambda_tilde;
    p.lambda_source = "supplied";
    const double el = epsilon * lambda_tilde;
    p.alpha = std::pow(delta_min, 4) * std::pow(el, 3) / (std::pow(n, 7) * std::pow(norm, 3));
    p.t = n * n * norm / (el * delta_min * delta_min);
    residual = zero_knowledge_residual_bound(p.alpha, p.t, beta, delta_min, norm);
  }
  p.lambda_star = p.lambda_tilde * p.alpha * p.alpha * p.t / (2.0 * norm * (2.0 * n + 1.0));
  set_steps(p);
  p.checks.push_back(identity("alpha dim_S delta_min^2 t^3 = 1", p.alpha * n * delta_min * delta_min * std::pow(p.t, 3), 1.0));
  p.checks.push_back(at_most("eps <= 2", epsilon, 2.0));
  p.checks.push_back(at_most("2 <= dim_S^2 4 ||H|| / (pi delta_min)", 2.0, n * n * 4.0 * norm / (M_PI * delta_min)));
  finish(p, delta_min, residual);
  return p;
}

Plan plan_perfect_knowledge(std::size_t dim_s, double delta_min, double beta, double epsilon, double lambda_tilde,
                            double multiplier) {
  check_common(epsilon, multiplier, beta);
  require(dim_s >= 2, "plan_perfect_knowledge: need dim_S >= 2");
  require(delta_min > 0.0, "plan_perfect_knowledge: delta_min must be positive");
  require(lambda_tilde > 0.0, "plan_perfect_knowledge: rescaled gap must be positive");
  const double n = static_cast<double>(dim_s);
  Plan p;
  p.kind = PlanKind::PerfectKnowledge;
  p.dim_s = dim_s;
  p.beta = beta;
  p.epsilon = epsilon;
  p.multiplier = multiplier;
  p.lambda_tilde = lambda_tilde;
  p.lambda_source = "supplied";
  const double el = epsilon * lambda_tilde;
  p.alpha = delta_min * std::pow(el, 1.5) / std::pow(n, 7);
  p.t = n * n / (delta_min * std::sqrt(el));
  const double pairs = n * (n - 1.0) / 2.0;
  p.lambda_star = rescaled_coupling_sq(p.alpha, p.t, dim_s) * lambda_tilde / pairs;
  set_steps(p);
  p.checks.push_back(identity("alpha dim_S delta_min^2 t^3 = 1", p.alpha * n * delta_min * delta_min * std::pow(p.t, 3), 1.0));
  finish(p, delta_min, 0.0);
  return p;
}

double perfect_knowledge_ground_gap(const SpectralProfile& sp) {
  const std::size_t n = sp.dim();
  require(n >= 2, "perfect_knowledge_ground_gap: need at least two levels", ErrorCode::Dimension);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) s += sp.multiplicity(i, j);
    best = std::min(best, s);
  }
  return best;
}

Plan plan_for(const Hamiltonian& h, const PlanRequest& req) {
  const SpectralProfile sp = spectral_profile(h);
  const std::size_t n = h.dim();
  switch (req.kind) {
    case PlanKind::SingleQubit: {
      require(n == 2, "plan_for: single-qubit plans need a two-level system", ErrorCode::Dimension);
      return plan_single_qubit(h.difference(1, 0), req.sigma, req.beta, req.epsilon, req.multiplier);
    }
    case PlanKind::Harmonic: {
      const double delta = sp.delta_min;
      Plan p;
      if (std::isinf(req.beta)) {
        p = plan_harmonic(n, delta, req.beta, req.epsilon, 1.0, req.multiplier);
        p.lambda_source = "closed-form";
      } else {
        const double gap = spectral_gap(build_T(h, req.beta, delta, 1.0, 1.0)).rescaled_gap;
        p = plan_harmonic(n, delta, req.beta, req.epsilon, gap, req.multiplier);
        p.lambda_source = "computed";
      }
      return p;
    }
    case PlanKind::ZeroKnowledge: {
      const double norm = h.spectral_norm();
      if (std::isinf(req.beta))
        return plan_zero_knowledge(n, norm, sp.delta_min, req.beta, req.epsilon, 0.0, req.multiplier);
      // t depends on the gap and the gap on t; iterate from the gap at unit scale.
      double gap = 1.0;
      Plan p;
      for (int it = 0; it < 50; ++it) {
        p = plan_zero_knowledge(n, norm, sp.delta_min, req.beta, req.epsilon, gap, req.multiplier);
        const double next = spectral_gap(build_expected_T(h, req.beta, p.alpha, p.t, UniformWindow{})).rescaled_gap;
        require(next > 0.0, "plan_for: zero-knowledge generator has no gap", ErrorCode::NonErgodic);
        const bool converged = std::abs(next - gap) <= 1e-10 * gap;
        gap = next;
        if (converged) break;
        if (it == 49) p.warnings.push_back("gap/t iteration did not converge");
      }
      p = plan_zero_knowledge(n, norm, sp.delta_min, req.beta, req.epsilon, gap, req.multiplier);
      p.lambda_source = "computed";
      return p;
    }
    case PlanKind::PerfectKnowledge: {
      require(h.is_nondegenerate(), "plan_for: perfect-knowledge plans need a non-degenerate spectrum",
              ErrorCode::Degenerate);
      Plan p;
      if (std::isinf(req.beta)) {
        p = plan_perfect_knowledge(n, sp.delta_min, req.beta, req.epsilon, perfect_knowledge_ground_gap(sp),
                                   req.multiplier);
        p.lambda_source = "closed-form";
      } else {
        const double gap =
            spectral_gap(build_expected_T(h, req.beta, 1.0, 1.0, PerfectKnowledge{})).rescaled_gap;
        p = plan_perfect_knowledge(n, sp.delta_min, req.beta, req.epsilon, gap, req.multiplier);
        p.lambda_source = "computed";
      }
      return p;
    }
  }
  fail(ErrorCode::Internal, "plan_for: unhandled kind");
}

json plan_to_json(const Plan& p) {
  json checks = json::array();
  for (const auto& c : p.checks) checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
  auto num = [](double v) -> json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return {{"kind", to_string(p.kind)},
          {"dim_s", p.dim_s},
          {"beta", num(p.beta)},
          {"epsilon", p.epsilon},
          {"alpha", p.alpha},
          {"t", p.t},
          {"t_upper", num(p.t_upper)},
          {"L", p.steps},
          {"L_bound", p.steps_bound},
          {"saturated", p.saturated},
          {"L_times_t", p.total_time()},
          {"multiplier", p.multiplier},
          {"lambda_tilde", p.lambda_tilde},
          {"lambda_source", p.lambda_source},
          {"lambda_star", p.lambda_star},
          {"checks", checks},
          {"valid", p.valid()},
          {"budget", budget_to_json(p.budget)},
          {"budget_ratio", p.budget_ratio},
          {"warnings", p.warnings}};
}

}  // namespace ritherm
