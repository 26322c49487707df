#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "core/channel.hpp"
#include "core/checks.hpp"
#include "core/errors.hpp"
#include "core/hamiltonian.hpp"
#include "core/weak_coupling.hpp"

using namespace ritherm;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

ComplexMatrix random_state(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  ComplexMatrix a(n, n);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = Complex(g(rng), g(rng));
  ComplexMatrix r = a * a.adjoint();
  return r / r.trace().real();
}

ChannelParams params(double alpha, double t, double beta, double gamma, std::size_t samples, std::uint64_t seed) {
  ChannelParams p;
  p.alpha = alpha;
  p.t = t;
  p.beta = beta;
  p.gamma = FixedGamma{gamma};
  p.n_samples = samples;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("zero coupling leaves a diagonal state unchanged") {
  const Hamiltonian h = random_nondegenerate(3, 1);
  Rng rng(2);
  const RandomInteraction g = sample_interaction(6, rng);
  const DensityMatrix rho = DensityMatrix::from_probabilities(RealVector::LinSpaced(3, 1.0, 3.0) / 6.0);
  const DensityMatrix out = apply_fixed_interaction(h, rho, g, 0.0, 3.7, EnvQubit::thermal(0.4, 1.0));
  CHECK((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero coupling evolves coherences freely") {
  const Hamiltonian h = random_nondegenerate(3, 3);
  Rng rng(4);
  const RandomInteraction g = sample_interaction(6, rng);
  const DensityMatrix rho(random_state(3, 5));
  const double t = 2.3;
  const DensityMatrix out = apply_fixed_interaction(h, rho, g, 0.0, t, EnvQubit::thermal(0.4, 1.0));
  const ComplexMatrix u = evolve(h.diagonal_matrix(), t);
  CHECK((out.matrix() - u * rho.matrix() * u.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("an interaction with zero eigenvalues acts like zero coupling") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  Rng rng(6);
  RandomInteraction g = sample_interaction(6, rng);
  g.eigenvalues.setZero();
  const DensityMatrix rho(random_state(3, 7));
  const EnvQubit env = EnvQubit::thermal(1.0, 2.0);
  const DensityMatrix a = apply_fixed_interaction(h, rho, g, 0.3, 4.0, env);
  const DensityMatrix b = apply_fixed_interaction(h, rho, g, 0.0, 4.0, env);
  CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fixed interaction outputs are valid states") {
  const Hamiltonian h = random_nondegenerate(4, 8);
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const RandomInteraction g = sample_interaction(8, rng);
    const DensityMatrix out =
        apply_fixed_interaction(h, DensityMatrix(random_state(4, 100 + k)), g, 0.5, 3.0, EnvQubit::thermal(0.6, 1.0));
    CHECK(std::abs(out.matrix().trace() - Complex(1.0, 0.0)) <= 1e-12);
    CHECK(hermiticity_error(out.matrix()) <= 1e-12);
    CHECK(out.validate().min_eigenvalue >= -1e-8);
  }
  CHECK_THROWS_AS(apply_fixed_interaction(h, DensityMatrix::maximally_mixed(3), sample_interaction(8, rng), 0.1, 1.0,
                                          EnvQubit::thermal(1.0, 1.0)),
                  Error);
}

TEST_CASE("a single sample is one fixed-interaction draw") {
  const Hamiltonian h = make_qubit(1.0);
  ChannelParams p = params(0.2, 3.0, 1.0, 1.0, 1, 11);
  const DensityMatrix rho = DensityMatrix::maximally_mixed(2);
  const ChannelEstimate est = apply_channel(h, rho, p, 5);
  Rng rng = make_stream(11, {5, 0});
  const double gamma = draw_gamma(p.gamma, rng);
  const RandomInteraction g = sample_interaction(4, rng);
  const DensityMatrix direct = apply_fixed_interaction(h, rho, g, 0.2, 3.0, EnvQubit::thermal(gamma, 1.0));
  CHECK((est.mean.matrix() - direct.matrix()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("antithetic pairs average a draw with its negation") {
  const Hamiltonian h = make_qubit(1.0);
  ChannelParams p = params(0.2, 3.0, 1.0, 1.0, 2, 12);
  const DensityMatrix rho = DensityMatrix::basis_state(2, 1);
  const ChannelEstimate est = apply_channel(h, rho, p, 0);
  Rng rng = make_stream(12, {0, 0});
  draw_gamma(p.gamma, rng);
  const RandomInteraction g = sample_interaction(4, rng);
  const EnvQubit env = EnvQubit::thermal(1.0, 1.0);
  const ComplexMatrix expected = (apply_fixed_interaction(h, rho, g, 0.2, 3.0, env).matrix() +
                                  apply_fixed_interaction(h, rho, g.negated(), 0.2, 3.0, env).matrix()) /
                                 2.0;
  CHECK((est.mean.matrix() - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("channel estimates preserve trace") {
  const Hamiltonian h = random_nondegenerate(3, 14);
  for (bool anti : {true, false}) {
    ChannelParams p = params(0.1, 5.0, 1.0, 0.3, 25, 15);
    p.antithetic = anti;
    const ChannelEstimate est = apply_channel(h, DensityMatrix(random_state(3, 16)), p, 0, true);
    CHECK(std::abs(est.mean.matrix().trace() - Complex(1.0, 0.0)) <= 1e-12);
    CHECK(est.units == (anti ? 13u : 25u));
    CHECK(est.stderr_re.allFinite());
  }
}

TEST_CASE("diagonal inputs gain only higher-order coherences") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  const double alpha = 2e-3, t = 10.0;
  ChannelParams p = params(alpha, t, 1.0, 1.0, 2000, 17);
  const DensityMatrix rho = DensityMatrix::from_probabilities(RealVector::LinSpaced(3, 3.0, 1.0) / 6.0);
  const ChannelEstimate est = apply_channel(h, rho, p, 0, true);
  const double band = remainder_bound(alpha, t, 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double se = std::hypot(est.stderr_re(i, j), est.stderr_im(i, j));
      CHECK(std::abs(est.mean.matrix()(i, j)) <= band + 3.0 * se);
    }
}

TEST_CASE("qubit channel agrees with the weak-coupling generator") {
  const Hamiltonian h = make_qubit(1.0);
  const double alpha = 1e-3, t = 10.0, beta = 2.0;
  const RealMatrix m = build_full_T(h, beta, 1.0, alpha, t).markov();
  ChannelParams p = params(alpha, t, beta, 1.0, 10000, 18);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const ChannelEstimate est = apply_channel(h, DensityMatrix::basis_state(2, static_cast<std::size_t>(i)), p, 0, true);
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double diff = std::abs(est.mean.matrix()(j, j).real() - m(j, i));
      CHECK(diff <= 3.0 * est.stderr_re(j, j) + 5.0 * std::pow(alpha * t, 3));
    }
  }
}

TEST_CASE("channel mean is invariant under a fixed rotation of the interactions") {
  const Hamiltonian h = make_harmonic(2, 1.0);
  const DensityMatrix rho(random_state(2, 19));
  const EnvQubit env = EnvQubit::thermal(1.0, 0.7);
  Rng wr(20);
  const ComplexMatrix w = sample_haar_unitary(4, wr);
  const std::size_t samples = 20000;
  ComplexMatrix plain = ComplexMatrix::Zero(2, 2), rotated = plain;
  RealMatrix sq = RealMatrix::Zero(2, 2);
  Rng a(21), b(22);
  for (std::size_t k = 0; k < samples; ++k) {
    const ComplexMatrix x = apply_fixed_interaction(h, rho, sample_interaction(4, a), 0.5, 2.0, env).matrix();
    RandomInteraction g = sample_interaction(4, b);
    g.eigenvectors = w * g.eigenvectors;
    const ComplexMatrix y = apply_fixed_interaction(h, rho, g, 0.5, 2.0, env).matrix();
    plain += x;
    rotated += y;
    sq += (x - y).cwiseAbs2();
  }
  const double n = static_cast<double>(samples);
  const ComplexMatrix diff = (plain - rotated) / n;
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double se = std::sqrt(sq(i, j) / n / n);
      CHECK(std::abs(diff(i, j)) <= 4.0 * se);
    }
}

TEST_CASE("zero temperature ancilla heats only off resonance") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  const TransitionGenerator g = build_full_T(h, kInf, 1.0, 1e-3, 10.0);
  // Heating 0 -> 1 is off resonance: the bare term at Delta t / 2 = 5 and the ground ancilla term at 10.
  const double a2 = rescaled_coupling_sq(1e-3, 10.0, 3);
  const double expected = a2 * (std::pow(std::sin(5.0) / 5.0, 2) + std::pow(std::sin(10.0) / 10.0, 2));
  CHECK(g.T(1, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(build_T(h, kInf, 1.0, 1e-3, 10.0).T(1, 0) == 0.0);
  const EnvQubit env = EnvQubit::thermal(1.0, kInf);
  CHECK(env.q1 == 0.0);
}

TEST_CASE("trajectory bookkeeping and determinism") {
  const Hamiltonian h = make_qubit(1.0);
  const ChannelParams p = params(0.05, 4.0, 1.0, 1.0, 8, 23);
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);
  const DensityMatrix target = gibbs_state(h, 1.0);
  const Trajectory zero = iterate_channel(h, rho0, p, 0, target);
  REQUIRE(zero.distances.size() == 1);
  CHECK(zero.distances[0] == trace_distance(rho0, target));
  const Trajectory a = iterate_channel(h, rho0, p, 30, target);
  const Trajectory b = iterate_channel(h, rho0, p, 30, target);
  CHECK(a.distances.size() == 31);
  CHECK(a.distances == b.distances);
  ChannelParams q = p;
  q.seed = 24;
  CHECK(iterate_channel(h, rho0, q, 30, target).distances != a.distances);
}

TEST_CASE("trajectories do not depend on the thread count") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  const ChannelParams p = params(0.05, 2.0 * std::numbers::pi, 1.0, 1.0, 4, 25);
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(3);
  const DensityMatrix target = gibbs_state(h, 1.0);
  const TrajectoryEnsemble one = run_trajectories(h, rho0, p, 20, target, 6, 1);
  const TrajectoryEnsemble four = run_trajectories(h, rho0, p, 20, target, 6, 4);
  CHECK(one.per_trial == four.per_trial);
  CHECK(one.mean == four.mean);
}

TEST_CASE("minimum interactions edge cases") {
  const Hamiltonian h = make_qubit(1.0);
  const ChannelParams p = params(0.05, 4.0, 1.0, 1.0, 4, 26);
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);
  const auto same = min_interactions(h, rho0, p, rho0, 0.05, 100, 3);
  REQUIRE(same.steps.has_value());
  CHECK(*same.steps == 0);
  const auto never = min_interactions(h, rho0, p, gibbs_state(h, 1.0), 1e-9, 5, 3);
  CHECK_FALSE(never.steps.has_value());
  CHECK(never.evaluated_up_to == 5);
  CHECK(std::isfinite(never.mean_distance));
  CHECK_THROWS_AS(min_interactions(h, rho0, p, rho0, 0.0, 5, 3), Error);
}

TEST_CASE("binary search matches a linear scan and shrinks with stronger coupling") {
  const Hamiltonian h = make_harmonic(4, 1.0);
  const double t = 2.0 * std::numbers::pi;
  const DensityMatrix rho0 = DensityMatrix::maximally_mixed(4);
  const DensityMatrix target = gibbs_state(h, 0.5);
  std::uint64_t last = std::numeric_limits<std::uint64_t>::max();
  for (double a2 : {0.02, 0.05, 0.1}) {
    const double alpha = std::sqrt(a2 * 9.0) / t;
    const ChannelParams p = params(alpha, t, 0.5, 1.0, 4, 27);
    SearchOptions bin, lin;
    lin.strategy = SearchStrategy::Linear;
    const auto rb = min_interactions(h, rho0, p, target, 0.1, 5000, 8, bin);
    const auto rl = min_interactions(h, rho0, p, target, 0.1, 5000, 8, lin);
    REQUIRE(rb.steps.has_value());
    REQUIRE(rl.steps.has_value());
    CHECK(*rb.steps == *rl.steps);
    CHECK(rb.mean_distance == rl.mean_distance);
    CHECK(*rb.steps < last);
    last = *rb.steps;
  }
}

TEST_CASE("gamma policies") {
  Rng rng(28);
  const Hamiltonian h = make_harmonic(4, 1.0);
  for (int k = 0; k < 2000; ++k) CHECK(draw_gamma(GaussianGamma{0.0, 1.0}, rng) >= 0.0);
  for (int k = 0; k < 200; ++k) {
    const double g = draw_gamma(UniformGamma{0.5, 2.0}, rng);
    CHECK(g >= 0.5);
    CHECK(g <= 2.0);
  }
  const GammaPolicy exact = eigdiff_policy(h, 0.0);
  for (int k = 0; k < 50; ++k) {
    const double g = draw_gamma(exact, rng);
    CHECK(std::abs(g - std::round(g)) <= 1e-12);
  }
  // Perfect knowledge hits gap k with probability (4 - k) / 6.
  const GammaPolicy pk = perfect_knowledge_policy(spectral_profile(h));
  std::array<int, 4> counts{};
  const int draws = 60000;
  for (int k = 0; k < draws; ++k) ++counts[static_cast<std::size_t>(std::lround(draw_gamma(pk, rng)))];
  for (int gap = 1; gap <= 3; ++gap) {
    const double p = (4.0 - gap) / 6.0;
    const double se = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(counts[static_cast<std::size_t>(gap)] / static_cast<double>(draws) - p) <= 4.0 * se);
  }
  const GammaPolicy zk = zero_knowledge_policy(h);
  CHECK(std::get<UniformGamma>(zk).hi == doctest::Approx(16.0));
}

TEST_CASE("gamma policy json round trip") {
  const Hamiltonian h = make_harmonic(3, 1.0);
  for (const GammaPolicy& p : {GammaPolicy{FixedGamma{0.7}}, GammaPolicy{UniformGamma{0.0, 3.0}},
                               GammaPolicy{GaussianGamma{1.0, 0.5}}}) {
    CHECK(describe(policy_from_json(policy_to_json(p), h)) == describe(p));
  }
  CHECK(describe(policy_from_json({{"kind", "eigdiff"}, {"stddev", 0.1}}, h)) == "eigdiff(0.10000000000000001)");
  CHECK(std::get<FixedGamma>(policy_from_json({{"kind", "fixed"}}, h)).gamma == doctest::Approx(1.0));
  CHECK_THROWS_AS(policy_from_json({{"kind", "bogus"}}, h), Error);
}

TEST_CASE("validity suite over sampled applications") {
  for (const auto& r : channel_validity_checks(60, 29)) CHECK_MESSAGE(r.passed, r.label);
}
