#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "core/linalg.hpp"

namespace ritherm {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Stream seed for a coordinate tuple, e.g. (seed, interaction, sample).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  return Rng(derive_seed(seed, coords));
}

// Ginibre QR with the phases of diag(R) folded into Q.
ComplexMatrix sample_haar_unitary(std::size_t dim, Rng& rng);

struct RandomInteraction {
  ComplexMatrix eigenvectors;
  RealVector eigenvalues;

  std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
  ComplexMatrix matrix() const;
  RandomInteraction negated() const { return {eigenvectors, -eigenvalues}; }
};

// G = U D U^dagger with U Haar and D_ii ~ N(0, eigenvalue_stddev^2).
RandomInteraction sample_interaction(std::size_t dim, Rng& rng, double eigenvalue_stddev = 1.0);

}  // namespace ritherm
