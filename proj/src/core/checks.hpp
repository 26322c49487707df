#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/hamiltonian.hpp"
#include "core/linalg.hpp"

namespace ritherm {

// One comparison row; passed means deviation <= allowed.
struct CheckResult {
  std::string check;
  std::string label;
  std::size_t dim = 0;
  double value = 0.0;
  double expected = 0.0;
  double deviation = 0.0;
  double allowed = 0.0;
  bool passed = false;
};

bool all_passed(const std::vector<CheckResult>& rs);
nlohmann::json check_to_json(const CheckResult& r);

// Closed-form second moment of Haar U: E[U_{i1 j1} U_{i2 j2} (U^dag)_{k1 l1} (U^dag)_{k2 l2}], zero-based.
double haar_second_moment(std::size_t d, std::size_t i1, std::size_t j1, std::size_t i2, std::size_t j2,
                          std::size_t k1, std::size_t l1, std::size_t k2, std::size_t l2);

struct HaarCheckOptions {
  std::vector<std::size_t> dims{2, 3, 4};
  std::size_t samples = 100000;
  std::size_t tuples = 20;
  double sigmas = 3.0;
  std::uint64_t seed = 1;
};

// Monte Carlo against the closed form for random index tuples; half of them are drawn with a nonzero expectation.
std::vector<CheckResult> haar_moment_checks(const HaarCheckOptions& opts);

// E_G[G(x) G(y)] with G(s) = e^{iHs} G e^{-iHs}, entrywise against the closed form.
std::vector<CheckResult> heisenberg_product_checks(const RealVector& energies, double x, double y,
                                                   std::size_t samples, std::uint64_t seed, double sigmas = 3.0);
ComplexMatrix heisenberg_product_exact(const RealVector& energies, double x, double y);

// E_G[G(x) |a><b| G(y)], entrywise against the closed form.
std::vector<CheckResult> sandwich_checks(const RealVector& energies, std::size_t a, std::size_t b, double x, double y,
                                         std::size_t samples, std::uint64_t seed, double sigmas = 3.0);
ComplexMatrix sandwich_exact(const RealVector& energies, std::size_t a, std::size_t b, double x, double y);

// Every sampled Phi_G output: trace and Hermiticity within 1e-12, eigenvalues >= -1e-8.
std::vector<CheckResult> channel_validity_checks(std::size_t applications, std::uint64_t seed);

struct AgreementOptions {
  double beta = 2.0;
  double gamma = 1.0;
  double alpha = 1e-3;
  double t = 10.0;
  std::size_t samples = 10000;
  double sigmas = 3.0;
  std::uint64_t seed = 1;
};

// Monte Carlo diagonal of Phi(|i><i|) against (I + T_on + T_off) e_i for every basis input.
std::vector<CheckResult> weak_coupling_agreement(const Hamiltonian& h, const AgreementOptions& opts);

struct FixedPointOptions {
  std::size_t spectra = 20;
  std::size_t dim = 4;
  std::vector<double> betas{0.5, 2.0, 8.0};
  double alpha = 1e-3;
  double t = 20.0;
  std::uint64_t seed = 1;
};

// Perfect-knowledge detailed balance, harmonic Gibbs fixed point and the zero-knowledge residual bound.
std::vector<CheckResult> fixed_point_checks(const FixedPointOptions& opts);

// Random spectrum with distinct eigenvalues in [0, 1), sorted; pair differences are also distinct.
Hamiltonian random_nondegenerate(std::size_t dim, std::uint64_t seed);

// beta = inf gaps against their closed forms.
std::vector<CheckResult> ground_gap_checks(std::uint64_t seed);

// Qubit Markov chain run for the mixing-bound step count ends within l1 distance eps of Gibbs from both basis states.
std::vector<CheckResult> mixing_bound_checks(const std::vector<double>& epsilons);

}  // namespace ritherm
