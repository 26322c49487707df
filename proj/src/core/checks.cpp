#include "core/checks.hpp"

#include <algorithm>
#include <cmath>

#include "core/channel.hpp"
#include "core/errors.hpp"
#include "core/planner.hpp"
#include "core/quadrature.hpp"
#include "core/random.hpp"
#include "core/weak_coupling.hpp"

namespace ritherm {

using nlohmann::json;

bool all_passed(const std::vector<CheckResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.passed; });
}

json check_to_json(const CheckResult& r) {
  return {{"check", r.check},         {"label", r.label},     {"dim", r.dim},         {"value", r.value},
          {"expected", r.expected},   {"deviation", r.deviation}, {"allowed", r.allowed}, {"passed", r.passed}};
}

double haar_second_moment(std::size_t d, std::size_t i1, std::size_t j1, std::size_t i2, std::size_t j2,
                          std::size_t k1, std::size_t l1, std::size_t k2, std::size_t l2) {
  require(d >= 2, "haar_second_moment: dimension must be at least 2", ErrorCode::Dimension);
  auto dl = [](std::size_t a, std::size_t b) { return a == b ? 1.0 : 0.0; };
  const double dd = static_cast<double>(d);
  const double direct = dl(i1, l1) * dl(j1, k1) * dl(i2, l2) * dl(j2, k2) + dl(i1, l2) * dl(j1, k2) * dl(i2, l1) * dl(j2, k1);
  const double crossed = dl(i1, l2) * dl(j1, k1) * dl(i2, l1) * dl(j2, k2) + dl(i1, l1) * dl(j1, k2) * dl(i2, l2) * dl(j2, k1);
  return direct / (dd * dd - 1.0) - crossed / (dd * (dd * dd - 1.0));
}

namespace {

// Running entrywise mean and standard error of complex matrix samples.
class ComplexStats {
 public:
  ComplexStats(Eigen::Index rows, Eigen::Index cols)
      : sum_(ComplexMatrix::Zero(rows, cols)), sq_re_(RealMatrix::Zero(rows, cols)), sq_im_(RealMatrix::Zero(rows, cols)) {}

  void add(const ComplexMatrix& m) {
    sum_ += m;
    sq_re_ += m.real().cwiseAbs2();
    sq_im_ += m.imag().cwiseAbs2();
    ++n_;
  }

  ComplexMatrix mean() const { return sum_ / static_cast<double>(n_); }

  // sqrt(se_re^2 + se_im^2) per entry.
  RealMatrix stderr_abs() const {
    const double n = static_cast<double>(n_);
    const ComplexMatrix m = mean();
    RealMatrix var_re = ((sq_re_ / n - m.real().cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
    RealMatrix var_im = ((sq_im_ / n - m.imag().cwiseAbs2()) * (n / (n - 1.0))).cwiseMax(0.0);
    return ((var_re + var_im) / n).cwiseSqrt();
  }

 private:
  ComplexMatrix sum_;
  RealMatrix sq_re_, sq_im_;
  std::size_t n_ = 0;
};

CheckResult complex_row(std::string check, std::string label, std::size_t dim, Complex z, Complex expected,
                        double se, double sigmas) {
  CheckResult r{std::move(check), std::move(label), dim, std::abs(z), std::abs(expected), std::abs(z - expected),
                sigmas * se + 1e-12, false};
  r.passed = r.deviation <= r.allowed;
  return r;
}

CheckResult bound_row(std::string check, std::string label, std::size_t dim, double value, double allowed) {
  return {std::move(check), std::move(label), dim, value, 0.0, value, allowed, value <= allowed};
}

CheckResult equal_row(std::string check, std::string label, std::size_t dim, double value, double expected,
                      double tol) {
  const double dev = std::abs(value - expected);
  return {std::move(check), std::move(label), dim, value, expected, dev, tol, dev <= tol};
}

ComplexMatrix heisenberg(const RealVector& energies, const ComplexMatrix& g, double s) {
  const ComplexVector ph = (Complex(0.0, s) * energies.cast<Complex>()).array().exp();
  return ph.asDiagonal() * g * ph.conjugate().asDiagonal();
}

DensityMatrix random_density(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> nd;
  ComplexMatrix a(dim, dim);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = Complex(nd(rng), nd(rng));
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::vector<CheckResult> haar_moment_checks(const HaarCheckOptions& opts) {
  require(opts.samples >= 2, "haar_moment_checks: need at least two samples");
  std::vector<CheckResult> out;
  for (std::size_t d : opts.dims) {
    Rng pick = make_stream(opts.seed, {d, 0});
    std::uniform_int_distribution<std::size_t> idx(0, d - 1);
    std::bernoulli_distribution coin(0.5);
    struct Tuple {
      std::size_t i1, j1, i2, j2, k1, l1, k2, l2;
    };
    std::vector<Tuple> tuples;
    for (std::size_t k = 0; k < opts.tuples; ++k) {
      Tuple t{idx(pick), idx(pick), idx(pick), idx(pick), idx(pick), idx(pick), idx(pick), idx(pick)};
      if (k % 2 == 0) {
        const bool swap_l = coin(pick), swap_k = coin(pick);
        t.l1 = swap_l ? t.i2 : t.i1;
        t.l2 = swap_l ? t.i1 : t.i2;
        t.k1 = swap_k ? t.j2 : t.j1;
        t.k2 = swap_k ? t.j1 : t.j2;
      }
      tuples.push_back(t);
    }
    ComplexStats stats(static_cast<Eigen::Index>(tuples.size()), 1);
    Rng rng = make_stream(opts.seed, {d, 1});
    ComplexMatrix row(tuples.size(), 1);
    for (std::size_t s = 0; s < opts.samples; ++s) {
      const ComplexMatrix u = sample_haar_unitary(d, rng);
      for (std::size_t k = 0; k < tuples.size(); ++k) {
        const Tuple& t = tuples[k];
        auto ud = [&](std::size_t a, std::size_t b) { return std::conj(u(b, a)); };
        row(k, 0) = u(t.i1, t.j1) * u(t.i2, t.j2) * ud(t.k1, t.l1) * ud(t.k2, t.l2);
      }
      stats.add(row);
    }
    const ComplexMatrix mean = stats.mean();
    const RealMatrix se = stats.stderr_abs();
    for (std::size_t k = 0; k < tuples.size(); ++k) {
      const Tuple& t = tuples[k];
      const double exact = haar_second_moment(d, t.i1, t.j1, t.i2, t.j2, t.k1, t.l1, t.k2, t.l2);
      std::string label = "(" + std::to_string(t.i1) + std::to_string(t.j1) + std::to_string(t.i2) +
                          std::to_string(t.j2) + "|" + std::to_string(t.k1) + std::to_string(t.l1) +
                          std::to_string(t.k2) + std::to_string(t.l2) + ")";
      out.push_back(complex_row("haar-second-moment", label, d, mean(k, 0), exact, se(k, 0), opts.sigmas));
    }
  }
  return out;
}

ComplexMatrix heisenberg_product_exact(const RealVector& e, double x, double y) {
  const Eigen::Index d = e.size();
  ComplexMatrix m = ComplexMatrix::Identity(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index c = 0; c < d; ++c) m(a, a) += std::polar(1.0, (e(a) - e(c)) * (x - y));
  return m / static_cast<double>(d + 1);
}

ComplexMatrix sandwich_exact(const RealVector& e, std::size_t a, std::size_t b, double x, double y) {
  const Eigen::Index d = e.size();
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  m(a, b) += 1.0;
  if (a == b)
    for (Eigen::Index c = 0; c < d; ++c) m(c, c) += std::polar(1.0, (e(c) - e(a)) * (x - y));
  return m / static_cast<double>(d + 1);
}

std::vector<CheckResult> heisenberg_product_checks(const RealVector& energies, double x, double y,
                                                   std::size_t samples, std::uint64_t seed, double sigmas) {
  const std::size_t d = static_cast<std::size_t>(energies.size());
  ComplexStats stats(energies.size(), energies.size());
  Rng rng = make_stream(seed, {d, 2});
  for (std::size_t s = 0; s < samples; ++s) {
    const ComplexMatrix g = sample_interaction(d, rng).matrix();
    stats.add(heisenberg(energies, g, x) * heisenberg(energies, g, y));
  }
  const ComplexMatrix exact = heisenberg_product_exact(energies, x, y);
  const ComplexMatrix mean = stats.mean();
  const RealMatrix se = stats.stderr_abs();
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.push_back(complex_row("heisenberg-product", "(" + std::to_string(i) + "," + std::to_string(j) + ")", d,
                                mean(i, j), exact(i, j), se(i, j), sigmas));
  return out;
}

std::vector<CheckResult> sandwich_checks(const RealVector& energies, std::size_t a, std::size_t b, double x, double y,
                                         std::size_t samples, std::uint64_t seed, double sigmas) {
  const std::size_t d = static_cast<std::size_t>(energies.size());
  require(a < d && b < d, "sandwich_checks: index out of range", ErrorCode::Dimension);
  ComplexMatrix ab = ComplexMatrix::Zero(d, d);
  ab(a, b) = 1.0;
  ComplexStats stats(energies.size(), energies.size());
  Rng rng = make_stream(seed, {d, 3, a, b});
  for (std::size_t s = 0; s < samples; ++s) {
    const ComplexMatrix g = sample_interaction(d, rng).matrix();
    stats.add(heisenberg(energies, g, x) * ab * heisenberg(energies, g, y));
  }
  const ComplexMatrix exact = sandwich_exact(energies, a, b, x, y);
  const ComplexMatrix mean = stats.mean();
  const RealMatrix se = stats.stderr_abs();
  std::vector<CheckResult> out;
  const std::string tag = "|" + std::to_string(a) + "><" + std::to_string(b) + "|";
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.push_back(complex_row("heisenberg-sandwich", tag + "(" + std::to_string(i) + "," + std::to_string(j) + ")",
                                d, mean(i, j), exact(i, j), se(i, j), sigmas));
  return out;
}

std::vector<CheckResult> channel_validity_checks(std::size_t applications, std::uint64_t seed) {
  const std::vector<Hamiltonian> systems{make_qubit(1.0), make_harmonic(3, 1.0), random_nondegenerate(4, seed)};
  const double betas[] = {0.5, 2.0, std::numeric_limits<double>::infinity()};
  std::vector<CheckResult> out;
  for (std::size_t sys = 0; sys < systems.size(); ++sys) {
    const Hamiltonian& h = systems[sys];
    const std::size_t per = applications / systems.size() + (sys < applications % systems.size() ? 1 : 0);
    Rng rng = make_stream(seed, {sys, 4});
    std::uniform_real_distribution<double> ua(0.0, 0.5), ut(0.5, 20.0), ug(0.0, 2.0);
    double worst_trace = 0.0, worst_herm = 0.0, worst_eig = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < per; ++k) {
      const DensityMatrix rho = random_density(h.dim(), rng);
      const EnvQubit env = EnvQubit::thermal(ug(rng), betas[k % 3]);
      const RandomInteraction g = sample_interaction(2 * h.dim(), rng);
      const DensityMatrix out_rho = apply_fixed_interaction(h, rho, g, ua(rng), ut(rng), env);
      const StateReport rep = out_rho.validate();
      worst_trace = std::max(worst_trace, rep.trace_error);
      worst_herm = std::max(worst_herm, rep.hermiticity_error);
      worst_eig = std::min(worst_eig, rep.min_eigenvalue);
    }
    const std::string label = h.label() + " x" + std::to_string(per);
    out.push_back(bound_row("channel-trace", label, h.dim(), worst_trace, 1e-12));
    out.push_back(bound_row("channel-hermiticity", label, h.dim(), worst_herm, 1e-12));
    CheckResult eig{"channel-min-eigenvalue", label, h.dim(), worst_eig, 0.0, std::max(0.0, -worst_eig), 1e-8, false};
    eig.passed = worst_eig >= -1e-8;
    out.push_back(eig);
  }
  return out;
}

std::vector<CheckResult> weak_coupling_agreement(const Hamiltonian& h, const AgreementOptions& opts) {
  const std::size_t n = h.dim();
  const TransitionGenerator full = build_full_T(h, opts.beta, opts.gamma, opts.alpha, opts.t);
  const RealMatrix markov = full.markov();
  const double band = remainder_bound(opts.alpha, opts.t, n);
  ChannelParams params;
  params.alpha = opts.alpha;
  params.t = opts.t;
  params.beta = opts.beta;
  params.gamma = FixedGamma{opts.gamma};
  params.n_samples = opts.samples;
  params.seed = opts.seed;
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < n; ++i) {
    const ChannelEstimate est = apply_channel(h, DensityMatrix::basis_state(n, i), params, i, true);
    for (std::size_t j = 0; j < n; ++j) {
      const double mc = est.mean.matrix()(j, j).real();
      const double exact = markov(j, i);
      const double se = est.stderr_re(j, j);
      const double dev = std::abs(mc - exact);
      const double allowed = band + opts.sigmas * se;
      out.push_back({"weak-coupling", h.label() + " p" + std::to_string(j) + "<-" + std::to_string(i), n, mc, exact,
                     dev, allowed, dev <= allowed});
    }
  }
  return out;
}

Hamiltonian random_nondegenerate(std::size_t dim, std::uint64_t seed) {
  require(dim >= 2, "random_nondegenerate: need dim >= 2", ErrorCode::Dimension);
  Rng rng = make_stream(seed, {dim, 5});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> ev(dim);
    for (auto& v : ev) v = u(rng);
    const Hamiltonian h = Hamiltonian::from_eigenvalues(ev, "random-" + std::to_string(dim));
    const SpectralProfile sp = spectral_profile(h);
    if (sp.delta_min >= 1e-2 && static_cast<std::size_t>(sp.classes.size()) == sp.pair_count()) return h;
  }
  fail(ErrorCode::Internal, "random_nondegenerate: rejection sampling did not terminate");
}

std::vector<CheckResult> fixed_point_checks(const FixedPointOptions& opts) {
  std::vector<CheckResult> out;
  const Hamiltonian harmonic = make_harmonic(opts.dim, 1.0);
  for (double beta : opts.betas) {
    const RealVector fp = fixed_point(build_T(harmonic, beta, 1.0, opts.alpha, opts.t));
    const RealVector gibbs = gibbs_probabilities(harmonic, beta);
    out.push_back(equal_row("harmonic-fixed-point", "beta=" + fmt(beta), opts.dim, (fp - gibbs).cwiseAbs().maxCoeff(),
                            0.0, 1e-12));
  }
  for (std::size_t s = 0; s < opts.spectra; ++s) {
    const Hamiltonian h = random_nondegenerate(opts.dim, derive_seed(opts.seed, {s}));
    const SpectralProfile sp = spectral_profile(h);
    for (double beta : opts.betas) {
      const RealVector gibbs = gibbs_probabilities(h, beta);
      const std::string label = "spectrum " + std::to_string(s) + " beta=" + fmt(beta);
      const TransitionGenerator pk = build_expected_T(h, beta, opts.alpha, opts.t, PerfectKnowledge{});
      out.push_back(bound_row("perfect-knowledge-balance", label, opts.dim, detailed_balance_residual(pk.T, gibbs),
                              1e-12));
      const TransitionGenerator zk = build_expected_T(h, beta, opts.alpha, opts.t, UniformWindow{});
      out.push_back(bound_row("zero-knowledge-residual", label, opts.dim, detailed_balance_residual(zk.T, gibbs),
                              zero_knowledge_residual_bound(opts.alpha, opts.t, beta, sp.delta_min, h.spectral_norm())));
    }
  }
  return out;
}

std::vector<CheckResult> ground_gap_checks(std::uint64_t seed) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<CheckResult> out;
  const Hamiltonian harmonic = make_harmonic(4, 1.0);
  for (double t : {1.0, 10.0, 37.0}) {
    const double gap = spectral_gap(build_T(harmonic, inf, 1.0, 1e-3, t)).rescaled_gap;
    out.push_back(equal_row("harmonic-ground-gap", "t=" + fmt(t), 4, gap, 1.0, 1e-12));
  }
  std::vector<Hamiltonian> systems{harmonic};
  for (std::uint64_t s = 0; s < 3; ++s) systems.push_back(random_nondegenerate(4, derive_seed(seed, {s})));
  for (std::size_t k = 0; k < systems.size(); ++k) {
    const Hamiltonian& h = systems[k];
    const SpectralProfile sp = spectral_profile(h);
    const std::string label = k == 0 ? h.label() : "spectrum " + std::to_string(k - 1);
    // t chosen so that delta_min t / 2 >= pi / 2.
    for (double scale : {1.0, 3.0}) {
      const double t = scale * M_PI / sp.delta_min;
      const double isinc = sinc_square_integral(sp.delta_min * t / 2.0);
      const double gap = spectral_gap(build_expected_T(h, inf, 1e-3, t, UniformWindow{})).rescaled_gap;
      const std::string lt = label + " t=" + fmt(t);
      out.push_back(equal_row("zero-knowledge-ground-gap", lt, h.dim(), gap, isinc, 1e-12));
      CheckResult floor{"zero-knowledge-sinc-floor", lt, h.dim(), isinc, 2.43, std::max(0.0, 2.43 - isinc), 0.0, isinc >= 2.43};
      out.push_back(floor);
    }
    const double pk = spectral_gap(build_expected_T(h, inf, 1e-3, 10.0, PerfectKnowledge{})).rescaled_gap;
    out.push_back(equal_row("perfect-knowledge-ground-gap", label, h.dim(), pk, perfect_knowledge_ground_gap(sp), 1e-12));
  }
  return out;
}

std::vector<CheckResult> mixing_bound_checks(const std::vector<double>& epsilons) {
  const Hamiltonian h = make_qubit(1.0);
  const double t = 10.0;
  const double alpha = std::sqrt(0.05 * 5.0) / t;  // alpha~^2 = 0.05
  std::vector<CheckResult> out;
  for (double beta : {0.5, 2.0}) {
    const TransitionGenerator gen = build_T(h, beta, 1.0, alpha, t);
    const GapReport gap = spectral_gap(gen);
    const RealVector pi = gibbs_probabilities(h, beta);
    for (double eps : epsilons) {
      const JerisonBound jb = jerison_steps(2, gap.absolute_gap, eps);
      for (std::size_t start = 0; start < 2; ++start) {
        const RealVector p = markov_evolve(gen.T, RealVector::Unit(2, static_cast<Eigen::Index>(start)), jb.steps);
        // Full l1 norm, no factor 1/2.
        const double l1 = (p - pi).cwiseAbs().sum();
        out.push_back(bound_row("mixing-bound", "beta=" + fmt(beta) + " eps=" + fmt(eps) + " start=" +
                                    std::to_string(start) + " L=" + std::to_string(jb.steps),
                                2, l1, eps));
      }
    }
  }
  return out;
}

}  // namespace ritherm
