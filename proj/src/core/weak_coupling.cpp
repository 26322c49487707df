#include "core/weak_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/errors.hpp"

namespace ritherm {

using nlohmann::json;

double rescaled_coupling_sq(double alpha, double t, std::size_t dim_s) {
  return alpha * alpha * t * t / static_cast<double>(2 * dim_s + 1);
}

namespace {

void check_params(double beta, double gamma, double alpha, double t) {
  require(beta >= 0.0, "beta must be nonnegative");
  require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and nonnegative");
  require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be finite and nonnegative");
  require(t > 0.0 && std::isfinite(t), "t must be positive and finite");
}

bool on_resonance(double detuning, double delta_min, double tol, TiePolicy ties) {
  const double a = std::abs(detuning);
  return ties == TiePolicy::Inclusive ? a <= delta_min + tol : a < delta_min - tol;
}

void fill_diagonal(RealMatrix& m) {
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    m(i, i) = 0.0;
    m(i, i) = -m.col(i).sum();
  }
}

double weight(double gamma, double beta, bool excited) {
  if (std::isinf(beta)) return excited ? 0.0 : 1.0;
  return excited ? fermi_lower(-beta * gamma) : fermi_lower(beta * gamma);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Integral over v of w(c + 2v/t) sinc^2(v), v restricted to |v| <= delta_min t / 2 and c + 2v/t in [lo, hi].
double window_term(double c, double beta, double t, double delta_min, bool excited, double lo, double hi,
                   double rel_tol) {
  const double half = delta_min * t / 2.0;
  const double v0 = std::max(-half, (lo - c) * t / 2.0);
  const double v1 = std::min(half, (hi - c) * t / 2.0);
  if (!(v1 > v0)) return 0.0;
  if (std::isinf(beta)) {
    if (excited) return 0.0;
    return integrate_oscillatory([](double v) { return sinc2(v); }, v0, v1, rel_tol);
  }
  auto f = [=](double v) { return sinc2(v) * weight(c + 2.0 * v / t, beta, excited); };
  return integrate_oscillatory(f, v0, v1, rel_tol);
}

}  // namespace

double transition_element(const Hamiltonian& h, std::size_t i, std::size_t j, double beta, double gamma, double alpha,
                          double t) {
  check_params(beta, gamma, alpha, t);
  require(i < h.dim() && j < h.dim(), "transition_element: index out of range", ErrorCode::Dimension);
  require(i != j, "transition_element: diagonal elements follow from column sums");
  const EnvQubit env = EnvQubit::thermal(gamma, beta);
  const double a2 = rescaled_coupling_sq(alpha, t, h.dim());
  const double d = h.difference(i, j);
  return a2 * (sinc2(d * t / 2.0) + env.q0 * sinc2((d - gamma) * t / 2.0) + env.q1 * sinc2((d + gamma) * t / 2.0));
}

ResonanceSplit split_resonance(const Hamiltonian& h, double beta, double gamma, double alpha, double t,
                               double delta_min, TiePolicy ties) {
  check_params(beta, gamma, alpha, t);
  require(delta_min > 0.0, "split_resonance: delta_min must be positive");
  const std::size_t n = h.dim();
  const EnvQubit env = EnvQubit::thermal(gamma, beta);
  const double a2 = rescaled_coupling_sq(alpha, t, n);
  const double tol = h.degeneracy_tolerance();
  ResonanceSplit s;
  s.delta_min = delta_min;
  s.on = RealMatrix::Zero(n, n);
  s.off = RealMatrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = h.difference(i, j);
      const double cool = a2 * env.q0 * sinc2((d - gamma) * t / 2.0);
      const double heat = a2 * env.q1 * sinc2((d + gamma) * t / 2.0);
      s.off(j, i) += a2 * sinc2(d * t / 2.0);
      (on_resonance(d - gamma, delta_min, tol, ties) ? s.on : s.off)(j, i) += cool;
      (on_resonance(d + gamma, delta_min, tol, ties) ? s.on : s.off)(j, i) += heat;
    }
  fill_diagonal(s.on);
  fill_diagonal(s.off);
  return s;
}

TransitionGenerator build_T(const Hamiltonian& h, double beta, double gamma, double alpha, double t, TiePolicy ties) {
  require(alpha > 0.0, "build_T: alpha must be positive");
  const SpectralProfile sp = spectral_profile(h);
  TransitionGenerator g;
  g.T = split_resonance(h, beta, gamma, alpha, t, sp.delta_min, ties).on;
  g.meta = {alpha, t, beta, "fixed(" + fmt_double(gamma) + ")", 1.0 / rescaled_coupling_sq(alpha, t, h.dim()),
            "1/alpha_tilde^2", {}};
  return g;
}

TransitionGenerator build_full_T(const Hamiltonian& h, double beta, double gamma, double alpha, double t) {
  require(alpha > 0.0, "build_full_T: alpha must be positive");
  const SpectralProfile sp = spectral_profile(h);
  const ResonanceSplit s = split_resonance(h, beta, gamma, alpha, t, sp.delta_min);
  TransitionGenerator g;
  g.T = s.on + s.off;
  g.meta = {alpha, t, beta, "fixed(" + fmt_double(gamma) + ")+off-resonance",
            1.0 / rescaled_coupling_sq(alpha, t, h.dim()), "1/alpha_tilde^2", {}};
  return g;
}

double zero_knowledge_integral(double delta, double beta, double t, double delta_min, bool heating, double lo,
                               double hi, double rel_tol) {
  require(delta_min > 0.0 && t > 0.0, "zero_knowledge_integral: delta_min and t must be positive");
  return window_term(delta, beta, t, delta_min, heating, lo, hi, rel_tol);
}

TransitionGenerator build_expected_T(const Hamiltonian& h, double beta, double alpha, double t,
                                     const ExpectationMode& mode, TiePolicy ties, double rel_tol) {
  check_params(beta, 0.0, alpha, t);
  require(alpha > 0.0, "build_expected_T: alpha must be positive");
  const std::size_t n = h.dim();
  const SpectralProfile sp = spectral_profile(h);
  const double a2 = rescaled_coupling_sq(alpha, t, n);
  TransitionGenerator g;
  g.meta.alpha = alpha;
  g.meta.t = t;
  g.meta.beta = beta;
  g.T = RealMatrix::Zero(n, n);

  if (const auto* w = std::get_if<UniformWindow>(&mode)) {
    const double lo = w->lo;
    const double hi = w->hi < 0.0 ? 4.0 * sp.spectral_norm : w->hi;
    require(lo >= 0.0 && hi > lo, "build_expected_T: uniform window must satisfy 0 <= lo < hi", ErrorCode::InvalidWindow);
    const double width = hi - lo;
    const double max_diff = h.eigenvalue(n - 1) - h.eigenvalue(0);
    if (hi < max_diff || lo > sp.delta_min)
      g.meta.warnings.push_back("uniform window does not cover every eigenvalue difference; some transitions are "
                                "unreachable");
    const double pref = a2 / width * (2.0 / t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d = h.difference(i, j);
        g.T(j, i) = pref * (window_term(d, beta, t, sp.delta_min, false, lo, hi, rel_tol) +
                            window_term(-d, beta, t, sp.delta_min, true, lo, hi, rel_tol));
      }
    fill_diagonal(g.T);
    g.meta.gamma_description = "uniform[" + fmt_double(lo) + "," + fmt_double(hi) + "]";
    g.meta.rescale = width * static_cast<double>(2 * n + 1) / (2.0 * alpha * alpha * t);
    g.meta.rescale_kind = "window*(dim+1)/(2 alpha^2 t)";
  } else if (std::holds_alternative<PerfectKnowledge>(mode)) {
    if (!h.is_nondegenerate())
      fail(ErrorCode::Degenerate, "build_expected_T: perfect knowledge requires a non-degenerate spectrum");
    const double pairs = static_cast<double>(sp.pair_count());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d = std::abs(h.difference(i, j));
        const double prob = sp.multiplicity(i, j) / pairs;
        g.T(j, i) = a2 * prob * weight(d, beta, i < j);
      }
    fill_diagonal(g.T);
    g.meta.gamma_description = "perfect-knowledge";
    g.meta.rescale = pairs / a2;
    g.meta.rescale_kind = "C(dim_S,2)/alpha_tilde^2";
  } else {
    const auto& samples = std::get<EmpiricalSamples>(mode).gammas;
    require(!samples.empty(), "build_expected_T: empirical mode needs at least one gamma");
    for (double gamma : samples) g.T += split_resonance(h, beta, gamma, alpha, t, sp.delta_min, ties).on;
    g.T /= static_cast<double>(samples.size());
    g.meta.gamma_description = "empirical(" + std::to_string(samples.size()) + ")";
    g.meta.rescale = 1.0 / a2;
    g.meta.rescale_kind = "1/alpha_tilde^2";
  }
  return g;
}

std::size_t kernel_dimension(const RealMatrix& T) {
  Eigen::FullPivLU<RealMatrix> lu(T);
  lu.setThreshold(1e-10);
  return static_cast<std::size_t>(T.cols() - lu.rank());
}

RealVector fixed_point(const TransitionGenerator& gen) {
  const RealMatrix& T = gen.T;
  const auto n = T.rows();
  require(n > 0 && T.cols() == n, "fixed_point: generator must be square", ErrorCode::Dimension);
  if (n == 1) return RealVector::Ones(1);
  const std::size_t k = kernel_dimension(T);
  if (k != 1)
    fail(ErrorCode::NonErgodic,
         "fixed_point: eigenvalue 1 of I+T has multiplicity " + std::to_string(k) + ", stationary state not unique");
  RealMatrix a = T;
  a.row(n - 1).setOnes();
  RealVector b = RealVector::Zero(n);
  b(n - 1) = 1.0;
  RealVector p = a.fullPivLu().solve(b);
  return p / p.sum();
}

GapReport spectral_gap(const RealMatrix& T, double rescale) {
  const auto n = T.rows();
  require(n > 0 && T.cols() == n, "spectral_gap: generator must be square", ErrorCode::Dimension);
  require(std::isfinite(rescale) && rescale > 0.0, "spectral_gap: rescale must be positive");
  GapReport r;
  std::vector<Complex> mu(static_cast<std::size_t>(n));
  const double scale = T.cwiseAbs().maxCoeff();
  const double lower = n > 1 ? T.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff() : 0.0;
  r.triangular = lower <= 1e-14 * scale;
  if (r.triangular) {
    for (Eigen::Index k = 0; k < n; ++k) mu[static_cast<std::size_t>(k)] = T(k, k);
  } else {
    Eigen::EigenSolver<RealMatrix> es(T, false);
    if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "spectral_gap: eigensolver failed");
    for (Eigen::Index k = 0; k < n; ++k) mu[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
  }
  std::size_t trivial = 0;
  for (std::size_t k = 1; k < mu.size(); ++k)
    if (std::abs(mu[k]) < std::abs(mu[trivial])) trivial = k;
  double max_mod = 0.0;
  double min_decay = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mu.size(); ++k) {
    r.markov_eigenvalues.push_back(1.0 + mu[k]);
    r.rescaled_eigenvalues.push_back(rescale * mu[k]);
    if (k == trivial) continue;
    max_mod = std::max(max_mod, std::abs(1.0 + mu[k]));
    min_decay = std::min(min_decay, -rescale * mu[k].real());
  }
  r.absolute_gap = 1.0 - max_mod;
  r.rescaled_gap = min_decay;
  return r;
}

RealVector markov_evolve(const RealMatrix& T, const RealVector& p0, std::uint64_t steps) {
  require(T.rows() == T.cols() && T.rows() == p0.size(), "markov_evolve: dimension mismatch", ErrorCode::Dimension);
  require(std::abs(p0.sum() - 1.0) <= 1e-10 && p0.minCoeff() >= -1e-12, "markov_evolve: p0 is not a probability vector");
  const RealMatrix m = RealMatrix::Identity(T.rows(), T.cols()) + T;
  RealVector p = p0;
  for (std::uint64_t s = 0; s < steps; ++s) p = (m * p).eval();
  return p;
}

double detailed_balance_residual(const RealMatrix& T, const RealVector& p) { return (T * p).cwiseAbs().sum(); }

JerisonBound jerison_steps(std::size_t states, double gap, double epsilon) {
  require(states >= 1, "jerison_steps: need at least one state");
  require(gap > 0.0 && gap <= 1.0, "jerison_steps: gap must lie in (0, 1]");
  require(epsilon > 0.0, "jerison_steps: epsilon must be positive");
  const double nn = static_cast<double>(states);
  JerisonBound jb;
  jb.j_term = 2.0 * std::log(1.0 / gap) + 4.0 * (1.0 + std::log(2.0)) + (2.0 * std::log(1.0 / epsilon) - 1.0) / nn;
  jb.bound = nn / gap * jb.j_term;
  require(std::isfinite(jb.bound), "jerison_steps: bound is not finite", ErrorCode::Numerical);
  if (jb.bound >= 1.8e19) {
    jb.saturated = true;
    jb.steps = std::numeric_limits<std::uint64_t>::max();
  } else {
    jb.steps = jb.bound <= 0.0 ? 0 : static_cast<std::uint64_t>(std::ceil(jb.bound));
  }
  return jb;
}

double remainder_bound(double alpha, double t, std::size_t dim_s) {
  const double at = alpha * t;
  return 16.0 * std::sqrt(2.0 / M_PI) * static_cast<double>(dim_s) * at * at * at;
}

double off_resonance_bound(double alpha, double delta_min) { return 8.0 * alpha * alpha / (delta_min * delta_min); }

double zero_knowledge_residual_bound(double alpha, double t, double beta, double delta_min, double norm) {
  return alpha * alpha * t * std::exp(beta * delta_min) * M_PI / norm;
}

ErrorBudget error_budget(double alpha, double t, std::size_t dim_s, double delta_min, std::uint64_t steps,
                         double markov_epsilon, double fixed_point_residual) {
  require(alpha >= 0.0 && t > 0.0 && delta_min > 0.0, "error_budget: need alpha >= 0, t > 0, delta_min > 0");
  ErrorBudget b;
  b.markov_epsilon = markov_epsilon;
  b.fixed_point_residual = fixed_point_residual;
  b.off_resonance_bound = off_resonance_bound(alpha, delta_min);
  b.remainder_bound = remainder_bound(alpha, t, dim_s);
  b.steps = steps;
  b.accumulated = static_cast<double>(steps) * (b.off_resonance_bound + b.remainder_bound);
  return b;
}

json generator_to_json(const TransitionGenerator& gen) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < gen.T.rows(); ++i) {
    std::vector<double> r(gen.T.cols());
    for (Eigen::Index j = 0; j < gen.T.cols(); ++j) r[j] = gen.T(i, j);
    rows.push_back(r);
  }
  return json{{"dim", gen.dim()},
              {"T", rows},
              {"metadata",
               {{"alpha", gen.meta.alpha},
                {"t", gen.meta.t},
                {"beta", std::isinf(gen.meta.beta) ? json("inf") : json(gen.meta.beta)},
                {"gamma", gen.meta.gamma_description},
                {"rescale", gen.meta.rescale},
                {"rescale_kind", gen.meta.rescale_kind},
                {"warnings", gen.meta.warnings}}}};
}

json budget_to_json(const ErrorBudget& b) {
  return json{{"markov_epsilon", b.markov_epsilon},
              {"off_resonance_per_step", b.off_resonance_bound},
              {"remainder_per_step", b.remainder_bound},
              {"fixed_point_residual", b.fixed_point_residual},
              {"steps", b.steps},
              {"accumulated", b.accumulated},
              {"total", b.total()}};
}

}  // namespace ritherm
