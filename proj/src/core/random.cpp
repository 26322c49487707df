#include "core/random.hpp"

#include "core/errors.hpp"

namespace ritherm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

ComplexMatrix sample_haar_unitary(std::size_t dim, Rng& rng) {
  require(dim >= 1, "sample_haar_unitary: dimension must be positive", ErrorCode::Dimension);
  std::normal_distribution<double> normal(0.0, M_SQRT1_2);
  ComplexMatrix z(dim, dim);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < dim; ++i) {
      double re = normal(rng);
      double im = normal(rng);
      z(i, j) = Complex(re, im);
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (std::size_t k = 0; k < dim; ++k) {
    double mag = std::abs(r(k, k));
    Complex phase = mag > 0.0 ? r(k, k) / mag : Complex(1.0, 0.0);
    q.col(k) *= phase;
  }
  return q;
}

ComplexMatrix RandomInteraction::matrix() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

RandomInteraction sample_interaction(std::size_t dim, Rng& rng, double eigenvalue_stddev) {
  require(eigenvalue_stddev >= 0.0, "sample_interaction: negative eigenvalue spread");
  RandomInteraction g;
  g.eigenvectors = sample_haar_unitary(dim, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  g.eigenvalues.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) g.eigenvalues(k) = eigenvalue_stddev * normal(rng);
  return g;
}

}  // namespace ritherm
