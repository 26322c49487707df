#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "core/checks.hpp"
#include "core/errors.hpp"
#include "core/hamiltonian.hpp"
#include "core/quadrature.hpp"
#include "core/planner.hpp"
#include "core/weak_coupling.hpp"

using namespace ritherm;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double s2(double x) {
  if (x == 0.0) return 1.0;
  const double s = std::sin(x) / x;
  return s * s;
}

double q0(double gamma, double beta) { return std::isinf(beta) ? 1.0 : 1.0 / (1.0 + std::exp(-beta * gamma)); }
double q1(double gamma, double beta) { return 1.0 - q0(gamma, beta); }

template <class F>
double simpson(F f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + static_cast<double>(k) * h);
  return s * h / 3.0;
}

// Expected on-resonance entry for transitions across a gap d > 0 with gamma uniform on [lo, hi],
// integrated directly in gamma.
double uniform_entry_oracle(double d, bool heating, double beta, double alpha, double t, double dmin, double lo,
                            double hi, std::size_t dim) {
  const double a2 = alpha * alpha * t * t / static_cast<double>(2 * dim + 1);
  const double g0 = std::max(lo, d - dmin), g1 = std::min(hi, d + dmin);
  if (!(g1 > g0)) return 0.0;
  auto f = [&](double g) { return (heating ? q1(g, beta) : q0(g, beta)) * s2((d - g) * t / 2.0); };
  return a2 / (hi - lo) * simpson(f, g0, g1, 1000000);
}

double lower_max(const RealMatrix& m) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

}  // namespace

TEST_CASE("rescaled coupling") {
  CHECK(rescaled_coupling_sq(0.1, 10.0, 2) == doctest::Approx(0.2));
  CHECK(rescaled_coupling_sq(0.0, 10.0, 4) == 0.0);
}

TEST_CASE("qubit transition elements") {
  const Hamiltonian h = make_qubit(1.0);
  const double beta = 1.5, gamma = 0.8, alpha = 0.01, t = 7.0;
  const double a2 = alpha * alpha * t * t / 5.0;
  // Cooling from the excited level.
  CHECK(transition_element(h, 1, 0, beta, gamma, alpha, t) ==
        doctest::Approx(a2 * (s2(t / 2.0) + q0(gamma, beta) * s2((1.0 - gamma) * t / 2.0) +
                              q1(gamma, beta) * s2((1.0 + gamma) * t / 2.0)))
            .epsilon(1e-14));
  // Heating from the ground level.
  CHECK(transition_element(h, 0, 1, beta, gamma, alpha, t) ==
        doctest::Approx(a2 * (s2(t / 2.0) + q0(gamma, beta) * s2((1.0 + gamma) * t / 2.0) +
                              q1(gamma, beta) * s2((1.0 - gamma) * t / 2.0)))
            .epsilon(1e-14));
  CHECK_THROWS_AS(transition_element(h, 1, 1, beta, gamma, alpha, t), Error);
}

TEST_CASE("qubit generator matches the closed form") {
  const Hamiltonian h = make_qubit(1.0);
  for (double beta : {0.0, 0.5, 2.0, kInf})
    for (double gamma : {0.7, 1.0, 1.3}) {
      const double alpha = 0.01, t = 6.0;
      const TransitionGenerator g = build_T(h, beta, gamma, alpha, t);
      const double a2 = rescaled_coupling_sq(alpha, t, 2);
      const double s = s2((1.0 - gamma) * t / 2.0);
      const double e = std::isinf(beta) ? 0.0 : std::exp(-beta * gamma);
      RealMatrix expected(2, 2);
      expected << -e, 1.0, e, -1.0;
      expected *= a2 * s / (1.0 + e);
      CHECK((g.T - expected).cwiseAbs().maxCoeff() <= 1e-16);
      const RealVector p = fixed_point(g);
      CHECK(p(0) == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
      CHECK(p(1) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
      CHECK(g.meta.rescale == doctest::Approx(1.0 / a2));
    }
}

TEST_CASE("on resonance the cooling element reaches its maximum") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  const double a2 = rescaled_coupling_sq(0.01, 40.0, 3);
  const ResonanceSplit s = split_resonance(h, 2.0, 1.0, 0.01, 40.0, 1.0);
  CHECK(s.on(0, 1) == doctest::Approx(a2 * q0(1.0, 2.0)).epsilon(1e-14));
}

TEST_CASE("infinite temperature gives equal heating and cooling prefactors") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const ResonanceSplit s = split_resonance(h, 0.0, 1.0, 0.02, 9.0, 1.0);
  for (Eigen::Index i = 0; i + 1 < 4; ++i) CHECK(s.on(i, i + 1) == doctest::Approx(s.on(i + 1, i)).epsilon(1e-14));
}

TEST_CASE("harmonic on-resonance generator is tridiagonal") {
  const Hamiltonian h = make_harmonic(5, 1.0);
  const double beta = 1.2, alpha = 0.01, t = 2.0 * std::numbers::pi * 3.0;
  const double a2 = rescaled_coupling_sq(alpha, t, 5);
  const ResonanceSplit s = split_resonance(h, beta, 1.0, alpha, t, 1.0);
  for (Eigen::Index r = 0; r < 5; ++r)
    for (Eigen::Index c = 0; c < 5; ++c) {
      if (r == c) continue;
      if (r == c - 1) CHECK(s.on(r, c) == doctest::Approx(a2 * q0(1.0, beta)).epsilon(1e-14));
      else if (r == c + 1) CHECK(s.on(r, c) == doctest::Approx(a2 * q1(1.0, beta)).epsilon(1e-14));
      else CHECK(s.on(r, c) == 0.0);
    }
}

TEST_CASE("gamma far from every difference leaves nothing on resonance") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const ResonanceSplit s = split_resonance(h, 1.0, 9.0, 0.01, 5.0, 1.0);
  CHECK(s.on.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.off.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("split reconstructs the full transition element") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
    const Hamiltonian h = random_nondegenerate(n, 1000 + static_cast<std::uint64_t>(trial));
    const SpectralProfile sp = spectral_profile(h);
    const double gamma = 2.0 * u(rng), beta = trial % 10 == 0 ? kInf : 5.0 * u(rng);
    const double alpha = 0.05 * u(rng) + 1e-4, t = 1.0 + 50.0 * u(rng);
    const ResonanceSplit s = split_resonance(h, beta, gamma, alpha, t, sp.delta_min);
    const RealMatrix sum = s.on + s.off;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double full = transition_element(h, i, j, beta, gamma, alpha, t);
        CHECK(std::abs(sum(j, i) - full) <= 1e-14 * std::max(1.0, full));
        // Each on-resonance piece passes its indicator.
        const double d = h.difference(i, j);
        if (s.on(j, i) > 0.0) CHECK((std::abs(d - gamma) <= sp.delta_min || std::abs(d + gamma) <= sp.delta_min));
      }
    CHECK(s.on.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(s.off.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("off-resonance map obeys its trace norm bound") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const Hamiltonian h = random_nondegenerate(n, 50 + static_cast<std::uint64_t>(trial));
    const SpectralProfile sp = spectral_profile(h);
    const double alpha = 0.01 + 0.05 * u(rng), t = 1.0 + 40.0 * u(rng);
    const ResonanceSplit s = split_resonance(h, 3.0 * u(rng), 2.0 * u(rng), alpha, t, sp.delta_min);
    RealVector p(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = u(rng);
    p /= p.sum();
    CHECK((s.off * p).cwiseAbs().sum() <= off_resonance_bound(alpha, sp.delta_min));
  }
}

TEST_CASE("harmonic zero temperature generator") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const double alpha = 0.01, t = 2.0 * std::numbers::pi * 4.0;
  const double a2 = rescaled_coupling_sq(alpha, t, 4);
  const TransitionGenerator g = build_T(h, kInf, 1.0, alpha, t);
  RealMatrix expected = RealMatrix::Zero(4, 4);
  for (Eigen::Index i = 1; i < 4; ++i) {
    expected(i, i) = -a2;
    expected(i - 1, i) = a2;
  }
  CHECK((g.T - expected).cwiseAbs().maxCoeff() <= 1e-16);
  CHECK(lower_max(g.T) == 0.0);
  const RealVector p = fixed_point(g);
  CHECK(p(0) == doctest::Approx(1.0));
  const GapReport r = spectral_gap(g);
  CHECK(r.rescaled_gap == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("harmonic fixed point is Gibbs at finite beta") {
  const Hamiltonian h = make_harmonic(6, 1.0);
  for (double beta : {0.1, 1.0, 4.0}) {
    const TransitionGenerator g = build_T(h, beta, 1.0, 0.01, 2.0 * std::numbers::pi * 2.0);
    CHECK((fixed_point(g) - gibbs_probabilities(h, beta)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("uniform window entries against a Simpson oracle") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
    const Hamiltonian h = random_nondegenerate(n, 300 + static_cast<std::uint64_t>(trial));
    const SpectralProfile sp = spectral_profile(h);
    const double beta = trial == 0 ? kInf : 4.0 * u(rng);
    const double alpha = 1e-3, t = 5.0 + 60.0 * u(rng);
    const double lo = 0.0, hi = 4.0 * sp.spectral_norm;
    const TransitionGenerator g = build_expected_T(h, beta, alpha, t, UniformWindow{lo, hi});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d = h.difference(i, j);
        const double oracle = uniform_entry_oracle(std::abs(d), d < 0.0, beta, alpha, t, sp.delta_min, lo, hi, n);
        CHECK(std::abs(g.T(j, i) - oracle) <= 1e-8 * std::max(oracle, 1e-12));
      }
  }
}

TEST_CASE("zero temperature uniform window columns share one magnitude") {
  const Hamiltonian h = random_nondegenerate(4, 77);
  const SpectralProfile sp = spectral_profile(h);
  const double alpha = 1e-3, t = 3.0 * M_PI / sp.delta_min;
  const TransitionGenerator g = build_expected_T(h, kInf, alpha, t, UniformWindow{});
  const double a2 = rescaled_coupling_sq(alpha, t, 4);
  const double expected = a2 / (2.0 * t * sp.spectral_norm) * sinc_square_integral(sp.delta_min * t / 2.0);
  for (Eigen::Index i = 1; i < 4; ++i)
    for (Eigen::Index j = 0; j < i; ++j) CHECK(g.T(j, i) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(lower_max(g.T) <= 1e-14);
  const GapReport r = spectral_gap(g);
  CHECK(r.rescaled_gap == doctest::Approx(sinc_square_integral(sp.delta_min * t / 2.0)).epsilon(1e-12));
  CHECK(r.rescaled_gap >= 2.43);
}

TEST_CASE("uniform window residual stays under its bound") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Hamiltonian h = random_nondegenerate(4, 900 + seed);
    const SpectralProfile sp = spectral_profile(h);
    for (double beta : {0.5, 2.0}) {
      const double alpha = 1e-3, t = 20.0;
      const TransitionGenerator g = build_expected_T(h, beta, alpha, t, UniformWindow{});
      const double residual = (g.T * gibbs_probabilities(h, beta)).cwiseAbs().sum();
      CHECK(residual <= zero_knowledge_residual_bound(alpha, t, beta, sp.delta_min, sp.spectral_norm));
    }
  }
}

TEST_CASE("narrow uniform window warns") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const TransitionGenerator g = build_expected_T(h, 1.0, 1e-3, 10.0, UniformWindow{0.0, 1.5});
  CHECK_FALSE(g.meta.warnings.empty());
  CHECK_THROWS_AS(build_expected_T(h, 1.0, 1e-3, 10.0, UniformWindow{2.0, 1.0}), Error);
}

TEST_CASE("perfect knowledge is in exact detailed balance") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Hamiltonian h = random_nondegenerate(4, 400 + seed);
    for (double beta : {0.5, 2.0, 8.0}) {
      const TransitionGenerator g = build_expected_T(h, beta, 1e-3, 15.0, PerfectKnowledge{});
      const RealVector p = gibbs_probabilities(h, beta);
      CHECK((g.T * p).cwiseAbs().sum() <= 1e-12);
      CHECK(detailed_balance_residual(g.T, p) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(build_expected_T(Hamiltonian::from_eigenvalues({0, 1, 1}), 1.0, 1e-3, 5.0, PerfectKnowledge{}),
                  Error);
}

TEST_CASE("perfect knowledge ground gap closed form") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const TransitionGenerator g = build_expected_T(h, kInf, 1e-3, 10.0, PerfectKnowledge{});
  CHECK(lower_max(g.T) == 0.0);
  // Level 1 has one lower neighbour at the gap that occurs three times.
  CHECK(spectral_gap(g).rescaled_gap == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(perfect_knowledge_ground_gap(spectral_profile(h)) == doctest::Approx(3.0));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Hamiltonian r = random_nondegenerate(5, seed);
    const TransitionGenerator gr = build_expected_T(r, kInf, 1e-3, 10.0, PerfectKnowledge{});
    // Distinct differences: every multiplicity is one and level i has i lower neighbours.
    CHECK(spectral_gap(gr).rescaled_gap == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("empirical samples average the fixed generators") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  const std::vector<double> gs{0.9, 1.0, 1.4};
  const TransitionGenerator g = build_expected_T(h, 1.0, 1e-2, 8.0, EmpiricalSamples{gs});
  RealMatrix avg = RealMatrix::Zero(3, 3);
  for (double gamma : gs) avg += build_T(h, 1.0, gamma, 1e-2, 8.0).T;
  CHECK((g.T - avg / 3.0).cwiseAbs().maxCoeff() <= 1e-16);
}

TEST_CASE("generators are upper triangular at zero temperature") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Hamiltonian h = random_nondegenerate(4, 700 + seed);
    const double gamma = h.difference(2, 0);
    CHECK(lower_max(build_T(h, kInf, gamma, 1e-2, 12.0).T) <= 1e-14);
    CHECK(lower_max(build_expected_T(h, kInf, 1e-2, 12.0, UniformWindow{}).T) <= 1e-14);
    CHECK(lower_max(build_expected_T(h, kInf, 1e-2, 12.0, PerfectKnowledge{}).T) <= 1e-14);
  }
}

TEST_CASE("generators have zero column sums and stochastic steps") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Hamiltonian h = random_nondegenerate(5, 800 + seed);
    for (const TransitionGenerator& g :
         {build_T(h, 1.0, h.difference(1, 0), 1e-2, 10.0), build_full_T(h, 1.0, 0.5, 1e-2, 10.0),
          build_expected_T(h, 1.0, 1e-2, 10.0, UniformWindow{}),
          build_expected_T(h, 1.0, 1e-2, 10.0, PerfectKnowledge{})}) {
      CHECK(g.max_column_sum_error() <= 1e-12);
      const RealMatrix m = g.markov();
      CHECK(m.minCoeff() >= 0.0);
      CHECK(m.maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("fixed point rejects a chain with two closed classes") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  // Gamma = 3 only couples the outer levels; the middle pair never moves.
  const TransitionGenerator g = build_T(h, 1.0, 3.0, 1e-2, 2.0 * std::numbers::pi);
  try {
    fixed_point(g);
    FAIL("expected non-ergodic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonErgodic);
  }
  CHECK(kernel_dimension(g.T) == 3);
}

TEST_CASE("markov evolution") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const TransitionGenerator g = build_T(h, 1.0, 1.0, 0.1, 2.0 * std::numbers::pi);
  const RealVector p0 = RealVector::Unit(4, 3);
  CHECK(markov_evolve(g.T, p0, 0) == p0);
  const RealVector p = markov_evolve(g.T, p0, 200000);
  CHECK(std::abs(p.sum() - 1.0) <= 1e-10);
  CHECK(p.minCoeff() >= -1e-10);
  CHECK((p - fixed_point(g)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("mixing bound holds for the qubit chain") {
  for (const auto& r : mixing_bound_checks({0.1, 0.01})) CHECK_MESSAGE(r.passed, r.label);
}

TEST_CASE("jerison step counts") {
  const JerisonBound b = jerison_steps(2, 1.0, 0.5);
  CHECK(b.steps == 14);
  CHECK(b.bound == doctest::Approx(2.0 * (4.0 * (1.0 + std::log(2.0)) + (2.0 * std::log(2.0) - 1.0) / 2.0)));
  for (double lam : {0.9, 0.3, 0.01}) {
    CHECK(jerison_steps(3, lam / 2.0, 0.1).bound > 2.0 * jerison_steps(3, lam, 0.1).bound);
  }
  const double lam = 0.2;
  const double lim = (2.0 * std::log(1.0 / lam) + 4.0 * (1.0 + std::log(2.0))) / lam;
  CHECK(jerison_steps(100000, lam, 1.0).bound / 100000.0 == doctest::Approx(lim).epsilon(1e-4));
  CHECK_THROWS_AS(jerison_steps(2, 0.0, 0.1), Error);
}

TEST_CASE("error budget") {
  const ErrorBudget zero = error_budget(0.0, 5.0, 3, 1.0, 100);
  CHECK(zero.off_resonance_bound == 0.0);
  CHECK(zero.remainder_bound == 0.0);
  CHECK(zero.accumulated == 0.0);

  CHECK(off_resonance_bound(0.1, 0.5) == doctest::Approx(8.0 * 0.01 / 0.25));
  CHECK(remainder_bound(0.01, 3.0, 2) == doctest::Approx(16.0 * std::sqrt(2.0 / std::numbers::pi) * 2.0 * 2.7e-5));

  // alpha = c / t^3 makes (alpha t)^3 scale as t^-6.
  const double c = 0.5, t = 4.0;
  CHECK(remainder_bound(c / std::pow(t, 3), t, 2) / remainder_bound(c / std::pow(2 * t, 3), 2 * t, 2) ==
        doctest::Approx(64.0));

  const ErrorBudget b = error_budget(0.01, 3.0, 2, 1.0, 50, 0.02, 0.003);
  CHECK(b.accumulated == doctest::Approx(50.0 * (b.off_resonance_bound + b.remainder_bound)));
  CHECK(b.total() == doctest::Approx(0.023 + b.accumulated));
}
