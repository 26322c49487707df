#include "core/channel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "core/errors.hpp"

namespace ritherm {

using nlohmann::json;

GammaPolicy eigdiff_policy(const Hamiltonian& h, double stddev) {
  require(stddev >= 0.0, "eigdiff policy: noise must be nonnegative");
  EigdiffGamma p;
  p.stddev = stddev;
  const double tol = h.degeneracy_tolerance();
  for (std::size_t i = 0; i < h.dim(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (h.difference(i, j) > tol) p.differences.push_back(h.difference(i, j));
  require(!p.differences.empty(), "eigdiff policy: spectrum has no nonzero differences", ErrorCode::Degenerate);
  return p;
}

GammaPolicy perfect_knowledge_policy(const SpectralProfile& sp) {
  PerfectKnowledgeGamma p;
  for (const auto& c : sp.classes) {
    p.values.push_back(c.value);
    p.weights.push_back(static_cast<double>(c.multiplicity));
  }
  require(!p.values.empty(), "perfect-knowledge policy: no nonzero differences", ErrorCode::Degenerate);
  return p;
}

GammaPolicy zero_knowledge_policy(const Hamiltonian& h) { return UniformGamma{0.0, 4.0 * h.spectral_norm()}; }

namespace {

double positive_normal(double mean, double stddev, Rng& rng) {
  if (stddev == 0.0) {
    require(mean >= 0.0, "gamma policy: deterministic draw is negative");
    return mean;
  }
  std::normal_distribution<double> nd(mean, stddev);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    double g = nd(rng);
    if (g >= 0.0) return g;
  }
  fail(ErrorCode::Numerical, "gamma policy: could not draw a nonnegative value");
}

}  // namespace

double draw_gamma(const GammaPolicy& policy, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedGamma>) {
          return p.gamma;
        } else if constexpr (std::is_same_v<P, UniformGamma>) {
          return std::uniform_real_distribution<double>(p.lo, p.hi)(rng);
        } else if constexpr (std::is_same_v<P, GaussianGamma>) {
          return positive_normal(p.mean, p.stddev, rng);
        } else if constexpr (std::is_same_v<P, EigdiffGamma>) {
          std::uniform_int_distribution<std::size_t> pick(0, p.differences.size() - 1);
          return positive_normal(p.differences[pick(rng)], p.stddev, rng);
        } else {
          std::discrete_distribution<std::size_t> pick(p.weights.begin(), p.weights.end());
          return p.values[pick(rng)];
        }
      },
      policy);
}

std::string describe(const GammaPolicy& policy) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedGamma>) {
          os << "fixed(" << p.gamma << ")";
        } else if constexpr (std::is_same_v<P, UniformGamma>) {
          os << "uniform(" << p.lo << ";" << p.hi << ")";
        } else if constexpr (std::is_same_v<P, GaussianGamma>) {
          os << "gaussian(" << p.mean << ";" << p.stddev << ")";
        } else if constexpr (std::is_same_v<P, EigdiffGamma>) {
          os << "eigdiff(" << p.stddev << ")";
        } else {
          os << "perfect-knowledge";
        }
      },
      policy);
  return os.str();
}

DensityMatrix apply_fixed_interaction(const Hamiltonian& h, const DensityMatrix& rho, const RandomInteraction& g,
                                      double alpha, double t, const EnvQubit& env) {
  const std::size_t n = h.dim();
  const std::size_t dim = 2 * n;
  require(rho.dim() == n, "apply_fixed_interaction: state dimension does not match the Hamiltonian",
          ErrorCode::Dimension);
  require(g.dim() == dim, "apply_fixed_interaction: interaction must act on the joint space", ErrorCode::Dimension);
  require(std::isfinite(t), "apply_fixed_interaction: t must be finite");

  RealVector energies(dim);
  for (std::size_t i = 0; i < n; ++i) {
    energies(2 * i) = h.eigenvalue(i);
    energies(2 * i + 1) = h.eigenvalue(i) + env.gamma;
  }

  ComplexMatrix w;
  if (alpha == 0.0) {
    w = ComplexMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < dim; ++k) w(k, k) = std::polar(1.0, energies(k) * t);
  } else {
    ComplexMatrix k = alpha * (g.eigenvectors * g.eigenvalues.cast<Complex>().asDiagonal() * g.eigenvectors.adjoint());
    k.diagonal() += energies.cast<Complex>();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(k);
    if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "apply_fixed_interaction: eigensolver failed");
    ComplexVector phases(dim);
    for (std::size_t j = 0; j < dim; ++j) phases(j) = std::polar(1.0, es.eigenvalues()(j) * t);
    w = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }

  // rho (x) diag(q0, q1): only the columns with environment index e carry weight q_e.
  const ComplexMatrix& r = rho.matrix();
  ComplexMatrix joint = ComplexMatrix::Zero(dim, dim);
  const double q[2] = {env.q0, env.q1};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t e = 0; e < 2; ++e) joint(2 * i + e, 2 * k + e) = r(i, k) * q[e];

  ComplexMatrix out = w * joint * w.adjoint();
  return DensityMatrix(partial_trace_env(out, 2));
}

ChannelEstimate apply_channel(const Hamiltonian& h, const DensityMatrix& rho, const ChannelParams& params,
                              std::uint64_t interaction, bool with_stderr) {
  require(params.n_samples >= 1, "apply_channel: n_samples must be at least 1");
  require(params.alpha >= 0.0 && params.t > 0.0, "apply_channel: need alpha >= 0 and t > 0");
  require(params.beta >= 0.0, "apply_channel: beta must be nonnegative");
  const std::size_t n = h.dim();
  const std::size_t dim = 2 * n;
  const std::size_t pairs = params.antithetic ? params.n_samples / 2 : 0;
  const std::size_t singles = params.antithetic ? params.n_samples % 2 : params.n_samples;
  const std::size_t units = pairs + singles;

  ComplexMatrix sum = ComplexMatrix::Zero(n, n);
  RealMatrix sq_re, sq_im;
  if (with_stderr) {
    sq_re = RealMatrix::Zero(n, n);
    sq_im = RealMatrix::Zero(n, n);
  }
  for (std::size_t u = 0; u < units; ++u) {
    Rng rng = make_stream(params.seed, {interaction, u});
    const double gamma = draw_gamma(params.gamma, rng);
    const EnvQubit env = EnvQubit::thermal(gamma, params.beta);
    const RandomInteraction g = sample_interaction(dim, rng, params.eigenvalue_stddev);
    ComplexMatrix unit = apply_fixed_interaction(h, rho, g, params.alpha, params.t, env).matrix();
    double count = 1.0;
    if (u < pairs) {
      unit += apply_fixed_interaction(h, rho, g.negated(), params.alpha, params.t, env).matrix();
      count = 2.0;
    }
    sum += unit;
    if (with_stderr) {
      const ComplexMatrix m = unit / count;
      sq_re += m.real().cwiseProduct(m.real());
      sq_im += m.imag().cwiseProduct(m.imag());
    }
  }

  ChannelEstimate est{DensityMatrix(sum / static_cast<double>(params.n_samples)), {}, {}, units};
  if (with_stderr) {
    const double k = static_cast<double>(units);
    if (units < 2) {
      est.stderr_re = RealMatrix::Constant(n, n, std::numeric_limits<double>::infinity());
      est.stderr_im = est.stderr_re;
    } else {
      // Unit means share a common weight only when every unit is a pair or every unit is single.
      const ComplexMatrix mean_unit = sum / (params.antithetic && pairs > 0 && singles == 0 ? 2.0 * k : k);
      RealMatrix var_re = (sq_re / k - mean_unit.real().cwiseProduct(mean_unit.real())) * (k / (k - 1.0));
      RealMatrix var_im = (sq_im / k - mean_unit.imag().cwiseProduct(mean_unit.imag())) * (k / (k - 1.0));
      est.stderr_re = (var_re.cwiseMax(0.0) / k).cwiseSqrt();
      est.stderr_im = (var_im.cwiseMax(0.0) / k).cwiseSqrt();
    }
  }
  return est;
}

Trajectory iterate_channel(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params,
                           std::uint64_t steps, const DensityMatrix& target) {
  require(rho0.dim() == h.dim() && target.dim() == h.dim(), "iterate_channel: dimension mismatch",
          ErrorCode::Dimension);
  Trajectory tr;
  tr.seed = params.seed;
  tr.steps = steps;
  tr.distances.reserve(steps + 1);
  DensityMatrix state = rho0;
  tr.distances.push_back(trace_distance(state, target));
  for (std::uint64_t k = 0; k < steps; ++k) {
    state = apply_channel(h, state, params, k).mean;
    tr.distances.push_back(trace_distance(state, target));
  }
  tr.final_state = state;
  return tr;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) { return derive_seed(seed, {trial}); }

namespace {

template <class F>
void for_each_trial(std::size_t trials, unsigned threads, F&& f) {
  if (threads <= 1) {
    for (std::size_t k = 0; k < trials; ++k) f(k);
    return;
  }
  tbb::task_arena arena(static_cast<int>(threads));
  arena.execute([&] { tbb::parallel_for(std::size_t{0}, trials, [&](std::size_t k) { f(k); }); });
}

// Trials advance in lockstep so every cached step is available for all of them.
class TrialBank {
 public:
  TrialBank(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params, const DensityMatrix& target,
            std::size_t trials, unsigned threads)
      : h_(h), params_(params), target_(target), threads_(threads), states_(trials, rho0), dist_(trials) {
    for (auto& d : dist_) d.push_back(trace_distance(rho0, target));
  }

  std::uint64_t computed() const { return dist_.front().size() - 1; }

  void extend_to(std::uint64_t steps) {
    if (steps <= computed()) return;
    const std::uint64_t from = computed();
    for_each_trial(states_.size(), threads_, [&](std::size_t k) {
      ChannelParams p = params_;
      p.seed = trial_seed(params_.seed, k);
      for (std::uint64_t s = from; s < steps; ++s) {
        states_[k] = apply_channel(h_, states_[k], p, s).mean;
        dist_[k].push_back(trace_distance(states_[k], target_));
      }
    });
  }

  double mean(std::uint64_t step) {
    extend_to(step);
    double acc = 0.0;
    for (const auto& d : dist_) acc += d[step];
    return acc / static_cast<double>(dist_.size());
  }

  std::vector<double> at(std::uint64_t step) {
    extend_to(step);
    std::vector<double> out;
    for (const auto& d : dist_) out.push_back(d[step]);
    return out;
  }

 private:
  const Hamiltonian& h_;
  ChannelParams params_;
  DensityMatrix target_;
  unsigned threads_;
  std::vector<DensityMatrix> states_;
  std::vector<std::vector<double>> dist_;
};

}  // namespace

MinInteractionsResult min_interactions(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params,
                                       const DensityMatrix& target, double epsilon, std::uint64_t max_steps,
                                       std::size_t trials, const SearchOptions& opts) {
  require(epsilon > 0.0, "min_interactions: epsilon must be positive");
  require(trials >= 1, "min_interactions: need at least one trial");
  require(rho0.dim() == h.dim() && target.dim() == h.dim(), "min_interactions: dimension mismatch",
          ErrorCode::Dimension);
  TrialBank bank(h, rho0, params, target, trials, opts.threads);
  MinInteractionsResult res;
  auto finish = [&](std::optional<std::uint64_t> steps, std::uint64_t report_at) {
    res.steps = steps;
    res.trial_distances = bank.at(report_at);
    res.mean_distance = bank.mean(report_at);
    res.evaluated_up_to = bank.computed();
    return res;
  };

  if (bank.mean(0) < epsilon) {
    res.binary_steps = 0;
    return finish(0, 0);
  }

  if (opts.strategy == SearchStrategy::Linear) {
    for (std::uint64_t s = 1; s <= max_steps; ++s)
      if (bank.mean(s) < epsilon) return finish(s, s);
    return finish(std::nullopt, max_steps);
  }

  // Doubling bracket, then bisection on the cached means.
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  bool found = false;
  for (std::uint64_t probe = 1; max_steps > 0; probe = std::min(probe * 2, max_steps)) {
    if (bank.mean(probe) < epsilon) {
      hi = probe;
      found = true;
      break;
    }
    lo = probe;
    if (probe == max_steps) break;
  }
  if (found) {
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      (bank.mean(mid) < epsilon ? hi : lo) = mid;
    }
    res.binary_steps = hi;
  }
  // Verify against a scan of everything already simulated; the scan wins on disagreement.
  const std::uint64_t limit = bank.computed();
  std::optional<std::uint64_t> first;
  for (std::uint64_t s = 1; s <= limit; ++s)
    if (bank.mean(s) < epsilon) {
      first = s;
      break;
    }
  res.fallback_used = first != res.binary_steps;
  if (first) return finish(first, *first);
  return finish(std::nullopt, std::min(max_steps, limit));
}

TrajectoryEnsemble run_trajectories(const Hamiltonian& h, const DensityMatrix& rho0, const ChannelParams& params,
                                    std::uint64_t steps, const DensityMatrix& target, std::size_t trials,
                                    unsigned threads) {
  require(trials >= 1, "run_trajectories: need at least one trial");
  TrajectoryEnsemble ens;
  ens.per_trial.resize(trials);
  for_each_trial(trials, threads, [&](std::size_t k) {
    ChannelParams p = params;
    p.seed = trial_seed(params.seed, k);
    ens.per_trial[k] = iterate_channel(h, rho0, p, steps, target).distances;
  });
  ens.mean.assign(steps + 1, 0.0);
  ens.stderr_mean.assign(steps + 1, 0.0);
  const double n = static_cast<double>(trials);
  for (std::uint64_t s = 0; s <= steps; ++s) {
    double sum = 0.0, sq = 0.0;
    for (const auto& d : ens.per_trial) {
      sum += d[s];
      sq += d[s] * d[s];
    }
    const double m = sum / n;
    ens.mean[s] = m;
    ens.stderr_mean[s] = trials > 1 ? std::sqrt(std::max(0.0, (sq / n - m * m) * n / (n - 1.0)) / n) : 0.0;
  }
  return ens;
}

json policy_to_json(const GammaPolicy& policy) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedGamma>) {
          return {{"kind", "fixed"}, {"gamma", p.gamma}};
        } else if constexpr (std::is_same_v<P, UniformGamma>) {
          return {{"kind", "uniform"}, {"lo", p.lo}, {"hi", p.hi}};
        } else if constexpr (std::is_same_v<P, GaussianGamma>) {
          return {{"kind", "gaussian"}, {"mean", p.mean}, {"stddev", p.stddev}};
        } else if constexpr (std::is_same_v<P, EigdiffGamma>) {
          return {{"kind", "eigdiff"}, {"stddev", p.stddev}};
        } else {
          return {{"kind", "perfect-knowledge"}};
        }
      },
      policy);
}

GammaPolicy policy_from_json(const json& j, const Hamiltonian& h) {
  require(j.is_object(), "gamma policy must be an object", ErrorCode::Parse);
  const std::string kind = j.value("kind", std::string("fixed"));
  if (kind == "fixed") {
    if (j.contains("gamma")) return FixedGamma{j.at("gamma").get<double>()};
    return FixedGamma{spectral_profile(h).delta_min};
  }
  if (kind == "uniform")
    return UniformGamma{j.value("lo", 0.0), j.value("hi", 4.0 * h.spectral_norm())};
  if (kind == "gaussian")
    return GaussianGamma{j.value("mean", h.eigenvalues().mean()), j.value("stddev", h.spectral_norm() / 2.0)};
  if (kind == "eigdiff") return eigdiff_policy(h, j.value("stddev", 0.0));
  if (kind == "perfect-knowledge") return perfect_knowledge_policy(spectral_profile(h));
  fail(ErrorCode::Parse, "unknown gamma policy kind '" + kind + "'");
}

}  // namespace ritherm
