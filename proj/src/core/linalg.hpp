#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace ritherm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// max|A - A^dagger| relative to max|A| (absolute when A is zero).
double hermiticity_error(const ComplexMatrix& a);
bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-12);

// e^{+iHt} through the Hermitian eigendecomposition.
ComplexMatrix evolve(const ComplexMatrix& h, double t);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Trace over the second tensor factor; index (i, j) of the joint space is i * dim_e + j.
ComplexMatrix partial_trace_env(const ComplexMatrix& rho_se, std::size_t dim_e);

// Sum of |eigenvalues| of the Hermitian difference, no factor 1/2.
double trace_distance(const ComplexMatrix& rho, const ComplexMatrix& sigma);

double unitarity_error(const ComplexMatrix& u);

struct StateReport {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  bool ok = false;
};

class DensityMatrix {
 public:
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kPsdTol = 1e-10;

  DensityMatrix() = default;
  // Checks shape only; call validate() or checked() to enforce the state invariants.
  explicit DensityMatrix(ComplexMatrix m);

  static DensityMatrix checked(ComplexMatrix m);
  static DensityMatrix from_probabilities(const RealVector& p);
  static DensityMatrix maximally_mixed(std::size_t dim);
  static DensityMatrix basis_state(std::size_t dim, std::size_t k);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  RealVector populations() const { return m_.diagonal().real(); }
  StateReport validate() const;

 private:
  ComplexMatrix m_;
};

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.matrix(), b.matrix());
}

}  // namespace ritherm
