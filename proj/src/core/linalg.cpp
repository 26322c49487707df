#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace ritherm {

double hermiticity_error(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  double scale = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  double diff = a.size() ? (a - a.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  return scale > 0.0 ? diff / scale : diff;
}

bool is_hermitian(const ComplexMatrix& a, double rel_tol) { return hermiticity_error(a) <= rel_tol; }

ComplexMatrix evolve(const ComplexMatrix& h, double t) {
  require(std::isfinite(t), "evolve: time must be finite");
  require(is_hermitian(h), "evolve: Hamiltonian is not Hermitian", ErrorCode::Contract);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "evolve: eigensolver failed");
  ComplexVector phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) phases(k) = std::polar(1.0, es.eigenvalues()(k) * t);
  const auto& v = es.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ComplexMatrix partial_trace_env(const ComplexMatrix& rho_se, std::size_t dim_e) {
  const auto n = static_cast<std::size_t>(rho_se.rows());
  require(rho_se.rows() == rho_se.cols(), "partial_trace_env: matrix is not square", ErrorCode::Dimension);
  require(dim_e > 0 && n % dim_e == 0,
          "partial_trace_env: dimension " + std::to_string(n) + " not divisible by " + std::to_string(dim_e),
          ErrorCode::Dimension);
  const std::size_t ds = n / dim_e;
  ComplexMatrix out = ComplexMatrix::Zero(ds, ds);
  for (std::size_t i = 0; i < ds; ++i)
    for (std::size_t k = 0; k < ds; ++k) {
      Complex acc = 0.0;
      for (std::size_t j = 0; j < dim_e; ++j) acc += rho_se(i * dim_e + j, k * dim_e + j);
      out(i, k) = acc;
    }
  return out;
}

double trace_distance(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
  require(rho.rows() == sigma.rows() && rho.cols() == sigma.cols(), "trace_distance: dimension mismatch",
          ErrorCode::Dimension);
  ComplexMatrix d = rho - sigma;
  d = 0.5 * (d + d.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(d, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "trace_distance: eigensolver failed");
  return es.eigenvalues().cwiseAbs().sum();
}

double unitarity_error(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
  require(m_.rows() == m_.cols() && m_.rows() > 0, "DensityMatrix: matrix must be square and nonempty",
          ErrorCode::Dimension);
}

DensityMatrix DensityMatrix::checked(ComplexMatrix m) {
  DensityMatrix d(std::move(m));
  StateReport r = d.validate();
  if (!r.ok)
    fail(ErrorCode::Contract, "DensityMatrix: invalid state (trace error " + std::to_string(r.trace_error) +
                                  ", hermiticity " + std::to_string(r.hermiticity_error) + ", min eigenvalue " +
                                  std::to_string(r.min_eigenvalue) + ")");
  return d;
}

DensityMatrix DensityMatrix::from_probabilities(const RealVector& p) {
  require(p.size() > 0, "DensityMatrix: empty probability vector", ErrorCode::Dimension);
  return DensityMatrix(p.cast<Complex>().asDiagonal().toDenseMatrix());
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  require(dim > 0, "DensityMatrix: dimension must be positive", ErrorCode::Dimension);
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::basis_state(std::size_t dim, std::size_t k) {
  require(k < dim, "DensityMatrix: basis index out of range", ErrorCode::Dimension);
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return DensityMatrix(std::move(m));
}

StateReport DensityMatrix::validate() const {
  StateReport r;
  r.trace_error = std::abs(m_.trace() - Complex(1.0, 0.0));
  r.hermiticity_error = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  ComplexMatrix h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.ok = r.trace_error <= kTraceTol && r.hermiticity_error <= kHermitianTol && r.min_eigenvalue >= -kPsdTol;
  return r;
}

}  // namespace ritherm
