#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/linalg.hpp"

namespace ritherm {

inline constexpr double kDegeneracyRelTol = 1e-9;

class Hamiltonian {
 public:
  static Hamiltonian from_eigenvalues(std::vector<double> eigenvalues, std::string label = "");
  // Dense Hermitian input; eigendecomposed, the eigenbasis is kept.
  static Hamiltonian from_dense(const ComplexMatrix& h, std::string label = "");

  std::size_t dim() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  const RealVector& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(std::size_t i) const { return eigenvalues_(static_cast<Eigen::Index>(i)); }
  // lambda_i - lambda_j (zero-based indices).
  double difference(std::size_t i, std::size_t j) const { return eigenvalue(i) - eigenvalue(j); }
  double spectral_norm() const { return eigenvalues_.cwiseAbs().maxCoeff(); }
  double degeneracy_tolerance() const { return kDegeneracyRelTol * spectral_norm(); }
  bool is_nondegenerate() const;
  const std::optional<ComplexMatrix>& eigenbasis() const { return eigenbasis_; }
  const std::string& label() const { return label_; }
  // H_S in its own eigenbasis.
  ComplexMatrix diagonal_matrix() const;

 private:
  RealVector eigenvalues_;
  std::optional<ComplexMatrix> eigenbasis_;
  std::string label_;
};

Hamiltonian make_qubit(double gap);
Hamiltonian make_harmonic(std::size_t dim_s, double gap);

struct LoadOptions {
  bool require_nondegenerate = false;
};

Hamiltonian parse_hamiltonian(const nlohmann::json& j, const LoadOptions& opts = {});
Hamiltonian load_hamiltonian(const std::string& path, const LoadOptions& opts = {});
nlohmann::json hamiltonian_to_json(const Hamiltonian& h);

struct EnvQubit {
  double gamma = 0.0;
  double beta = 0.0;
  double q0 = 0.5;
  double q1 = 0.5;

  static EnvQubit thermal(double gamma, double beta);
};

// Logistic 1 / (1 + e^{-x}) without overflow.
double fermi_lower(double x);

RealVector gibbs_probabilities(const Hamiltonian& h, double beta);
DensityMatrix gibbs_state(const Hamiltonian& h, double beta);

struct DifferenceClass {
  double value = 0.0;
  int multiplicity = 0;
};

struct SpectralProfile {
  RealMatrix differences;
  double delta_min = 0.0;
  double spectral_norm = 0.0;
  double tolerance = 0.0;
  std::vector<DifferenceClass> classes;  // distinct positive differences, ascending
  Eigen::MatrixXi class_of;              // class index of |Delta(i,j)|, -1 when within tolerance of 0

  std::size_t dim() const { return static_cast<std::size_t>(differences.rows()); }
  int multiplicity(std::size_t i, std::size_t j) const;
  std::size_t pair_count() const { return dim() * (dim() - 1) / 2; }
};

SpectralProfile spectral_profile(const Hamiltonian& h, double tol);
SpectralProfile spectral_profile(const Hamiltonian& h);

}  // namespace ritherm
