#include "core/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace ritherm {

using nlohmann::json;

Hamiltonian Hamiltonian::from_eigenvalues(std::vector<double> eigenvalues, std::string label) {
  require(!eigenvalues.empty(), "Hamiltonian: no eigenvalues", ErrorCode::Dimension);
  for (double v : eigenvalues) require(std::isfinite(v), "Hamiltonian: eigenvalues must be finite");
  std::sort(eigenvalues.begin(), eigenvalues.end());
  Hamiltonian h;
  h.eigenvalues_ = Eigen::Map<RealVector>(eigenvalues.data(), static_cast<Eigen::Index>(eigenvalues.size()));
  h.label_ = std::move(label);
  return h;
}

Hamiltonian Hamiltonian::from_dense(const ComplexMatrix& m, std::string label) {
  require(m.rows() == m.cols() && m.rows() > 0, "Hamiltonian: dense matrix must be square", ErrorCode::Dimension);
  double scale = m.cwiseAbs().maxCoeff();
  double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10 * std::max(scale, std::numeric_limits<double>::min()) || asym == 0.0,
          "Hamiltonian: dense matrix is not Hermitian", ErrorCode::Contract);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "Hamiltonian: eigensolver failed");
  Hamiltonian h;
  h.eigenvalues_ = es.eigenvalues();  // ascending
  h.eigenbasis_ = es.eigenvectors();
  h.label_ = std::move(label);
  return h;
}

bool Hamiltonian::is_nondegenerate() const {
  const double tol = degeneracy_tolerance();
  for (Eigen::Index i = 1; i < eigenvalues_.size(); ++i)
    if (eigenvalues_(i) - eigenvalues_(i - 1) <= tol) return false;
  return true;
}

ComplexMatrix Hamiltonian::diagonal_matrix() const {
  return eigenvalues_.cast<Complex>().asDiagonal().toDenseMatrix();
}

Hamiltonian make_qubit(double gap) {
  require(gap > 0.0 && std::isfinite(gap), "make_qubit: gap must be positive");
  std::ostringstream label;
  label << "qubit(gap=" << gap << ")";
  return Hamiltonian::from_eigenvalues({0.0, gap}, label.str());
}

Hamiltonian make_harmonic(std::size_t dim_s, double gap) {
  require(dim_s >= 2, "make_harmonic: need at least two levels", ErrorCode::Dimension);
  require(gap > 0.0 && std::isfinite(gap), "make_harmonic: gap must be positive");
  std::vector<double> ev(dim_s);
  for (std::size_t i = 0; i < dim_s; ++i) ev[i] = static_cast<double>(i + 1) * gap;
  std::ostringstream label;
  label << "harmonic(dim=" << dim_s << ",gap=" << gap << ")";
  return Hamiltonian::from_eigenvalues(std::move(ev), label.str());
}

namespace {

std::vector<std::vector<double>> read_rows(const json& j, const char* key, std::size_t n) {
  require(j.contains(key) && j.at(key).is_array(), std::string("dense Hamiltonian: missing array '") + key + "'",
          ErrorCode::Parse);
  auto rows = j.at(key).get<std::vector<std::vector<double>>>();
  require(rows.size() == n, std::string("dense Hamiltonian: '") + key + "' has wrong row count", ErrorCode::Parse);
  for (const auto& r : rows)
    require(r.size() == n, std::string("dense Hamiltonian: '") + key + "' has a ragged row", ErrorCode::Parse);
  return rows;
}

}  // namespace

Hamiltonian parse_hamiltonian(const json& j, const LoadOptions& opts) {
  Hamiltonian h;
  try {
    require(j.is_object(), "Hamiltonian JSON must be an object", ErrorCode::Parse);
    const std::string format = j.value("format", std::string());
    const std::string label = j.value("label", std::string());
    if (format == "diagonal") {
      h = Hamiltonian::from_eigenvalues(j.at("eigenvalues").get<std::vector<double>>(), label);
    } else if (format == "dense") {
      const auto n = j.at("dim").get<std::size_t>();
      require(n > 0, "dense Hamiltonian: dim must be positive", ErrorCode::Parse);
      auto re = read_rows(j, "re", n);
      std::vector<std::vector<double>> im;
      if (j.contains("im")) im = read_rows(j, "im", n);
      ComplexMatrix m(n, n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = Complex(re[r][c], im.empty() ? 0.0 : im[r][c]);
      h = Hamiltonian::from_dense(m, label);
    } else {
      fail(ErrorCode::Parse, "Hamiltonian JSON: unknown format '" + format + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("Hamiltonian JSON: ") + e.what());
  }
  if (opts.require_nondegenerate && !h.is_nondegenerate())
    fail(ErrorCode::Degenerate, "Hamiltonian '" + h.label() + "' has a degenerate spectrum");
  return h;
}

Hamiltonian load_hamiltonian(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open Hamiltonian file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, "Hamiltonian file '" + path + "': " + e.what());
  }
  return parse_hamiltonian(j, opts);
}

json hamiltonian_to_json(const Hamiltonian& h) {
  std::vector<double> ev(h.eigenvalues().data(), h.eigenvalues().data() + h.dim());
  return json{{"format", "diagonal"}, {"label", h.label()}, {"eigenvalues", ev}};
}

double fermi_lower(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

EnvQubit EnvQubit::thermal(double gamma, double beta) {
  require(gamma >= 0.0 && std::isfinite(gamma), "EnvQubit: gap must be finite and nonnegative");
  require(beta >= 0.0, "EnvQubit: beta must be nonnegative");
  EnvQubit e;
  e.gamma = gamma;
  e.beta = beta;
  if (std::isinf(beta)) {
    e.q0 = 1.0;
    e.q1 = 0.0;
  } else {
    e.q0 = fermi_lower(beta * gamma);
    e.q1 = fermi_lower(-beta * gamma);
  }
  return e;
}

RealVector gibbs_probabilities(const Hamiltonian& h, double beta) {
  require(beta >= 0.0, "gibbs_state: beta must be nonnegative");
  const auto n = static_cast<Eigen::Index>(h.dim());
  RealVector p = RealVector::Zero(n);
  if (std::isinf(beta)) {
    if (n > 1 && h.eigenvalue(1) - h.eigenvalue(0) <= h.degeneracy_tolerance())
      fail(ErrorCode::Degenerate, "gibbs_state: ground space is degenerate at infinite beta");
    p(0) = 1.0;
    return p;
  }
  const double lo = h.eigenvalue(0);
  for (Eigen::Index i = 0; i < n; ++i) p(i) = std::exp(-beta * (h.eigenvalues()(i) - lo));
  return p / p.sum();
}

DensityMatrix gibbs_state(const Hamiltonian& h, double beta) {
  return DensityMatrix::from_probabilities(gibbs_probabilities(h, beta));
}

int SpectralProfile::multiplicity(std::size_t i, std::size_t j) const {
  int c = class_of(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return c < 0 ? 0 : classes[static_cast<std::size_t>(c)].multiplicity;
}

SpectralProfile spectral_profile(const Hamiltonian& h) { return spectral_profile(h, h.degeneracy_tolerance()); }

SpectralProfile spectral_profile(const Hamiltonian& h, double tol) {
  require(tol >= 0.0, "spectral_profile: tolerance must be nonnegative");
  const std::size_t n = h.dim();
  SpectralProfile sp;
  sp.tolerance = tol;
  sp.spectral_norm = h.spectral_norm();
  sp.differences.resize(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sp.differences(i, j) = h.difference(i, j);

  struct Entry {
    double value;
    std::size_t i, j;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) entries.push_back({sp.differences(i, j), i, j});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

  // Single-linkage clusters of the nonnegative differences; the first cluster is anchored at 0.
  struct Cluster {
    double lo, hi, sum;
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> clusters{{0.0, 0.0, 0.0, {}}};
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Cluster& last = clusters.back();
    if (entries[k].value - last.hi <= tol) {
      last.hi = std::max(last.hi, entries[k].value);
      last.sum += entries[k].value;
      last.members.push_back(k);
    } else {
      clusters.push_back({entries[k].value, entries[k].value, entries[k].value, {k}});
    }
  }
  if (clusters.size() < 2) fail(ErrorCode::Degenerate, "spectral_profile: all eigenvalues are equal");

  sp.delta_min = std::numeric_limits<double>::infinity();
  for (std::size_t c = 1; c < clusters.size(); ++c)
    sp.delta_min = std::min(sp.delta_min, clusters[c].lo - clusters[c - 1].hi);

  sp.class_of = Eigen::MatrixXi::Constant(n, n, -1);
  for (std::size_t c = 1; c < clusters.size(); ++c) {
    const auto& cl = clusters[c];
    sp.classes.push_back({cl.sum / static_cast<double>(cl.members.size()), static_cast<int>(cl.members.size())});
    const int idx = static_cast<int>(sp.classes.size() - 1);
    for (std::size_t k : cl.members) {
      sp.class_of(entries[k].i, entries[k].j) = idx;
      sp.class_of(entries[k].j, entries[k].i) = idx;
    }
  }
  return sp;
}

}  // namespace ritherm
