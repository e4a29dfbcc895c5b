#include "zenosim/operators.hpp"

#include "zenosim/error.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <string>

namespace zenosim {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_square(const Operator& a, const char* what) {
  if (!is_square(a)) {
    throw DimensionError(std::string(what) + ": operator is not square");
  }
}

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

// --------------------------- HilbertSpec -----------------------------------

Index HilbertSpec::dimension() const {
  if (n_qubits < 0 || boson_cutoff < 0) {
    throw DomainError("HilbertSpec: negative qubit count or cutoff");
  }
  if (n_qubits > 30) {
    throw DimensionError("HilbertSpec: qubit count too large");
  }
  const Index dim = (Index{1} << n_qubits) * (Index{boson_cutoff} + 1);
  if (dim > kMaxDimension) {
    throw DimensionError("HilbertSpec: total dimension " + std::to_string(dim) +
                         " exceeds maximum " + std::to_string(kMaxDimension));
  }
  return dim;
}

// --------------------------- states ----------------------------------------

Ket Ket::from_amplitudes(Vector amps, double tol) {
  if (amps.size() == 0) throw DimensionError("Ket: empty amplitude vector");
  if (!amps.allFinite()) throw DomainError("Ket: non-finite amplitude");
  const double n = amps.norm();
  if (std::abs(n - 1.0) > tol) {
    throw DomainError("Ket: norm " + std::to_string(n) + " differs from 1");
  }
  return Ket(std::move(amps));
}

Ket Ket::basis(Index dim, Index index) {
  if (dim <= 0) throw DimensionError("Ket::basis: dimension must be positive");
  if (index < 0 || index >= dim) throw DomainError("Ket::basis: index out of range");
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return Ket(std::move(v));
}

Ket Ket::normalized(Vector amps) {
  const double n = amps.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("Ket::normalized: zero or non-finite vector");
  amps /= n;
  return Ket(std::move(amps));
}

Ket Ket::unchecked(Vector amps) { return Ket(std::move(amps)); }

DensityMatrix DensityMatrix::from_matrix(Operator rho) {
  require_square(rho, "DensityMatrix");
  if (!rho.allFinite()) throw DomainError("DensityMatrix: non-finite entry");
  if (std::abs(rho.trace() - Complex{1.0, 0.0}) > kTraceTol) {
    throw DomainError("DensityMatrix: trace differs from 1");
  }
  if (!is_hermitian(rho, kHermitianTol)) throw DomainError("DensityMatrix: not Hermitian");
  DensityMatrix out(std::move(rho));
  if (out.min_eigenvalue() < kMinEigenvalueTol) {
    throw DomainError("DensityMatrix: negative eigenvalue");
  }
  return out;
}

DensityMatrix DensityMatrix::from_ket(const Ket& psi) {
  const Vector& v = psi.amplitudes();
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::unchecked(Operator rho) { return DensityMatrix(std::move(rho)); }

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  if (dim <= 0) throw DimensionError("maximally_mixed: dimension must be positive");
  return DensityMatrix(identity(dim) / static_cast<double>(dim));
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

double DensityMatrix::min_eigenvalue() const {
  const Operator herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// --------------------------- construction ----------------------------------

Operator identity(Index dim) { return Operator::Identity(dim, dim); }

Operator sigma(Axis axis) {
  Operator m(2, 2);
  switch (axis) {
    case Axis::X:
      m << 0.0, 1.0, 1.0, 0.0;
      break;
    case Axis::Y:
      m << 0.0, -kI, kI, 0.0;
      break;
    case Axis::Z:
      m << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return m;
}

Operator kron(const Operator& a, const Operator& b, Index max_dim) {
  require_square(a, "kron");
  require_square(b, "kron");
  if (a.rows() != 0 && b.rows() > max_dim / a.rows()) {
    throw DimensionError("kron: result dimension exceeds maximum " + std::to_string(max_dim));
  }
  Operator out = Eigen::kroneckerProduct(a, b);
  return out;
}

Operator kron_all(std::span<const Operator> factors, Index max_dim) {
  if (factors.empty()) return identity(1);
  Operator acc = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) acc = kron(acc, factors[i], max_dim);
  return acc;
}

LadderPair ladder_ops(int cutoff) {
  if (cutoff < 1) throw DomainError("ladder_ops: cutoff must be >= 1");
  const Index dim = Index{cutoff} + 1;
  Operator a = Operator::Zero(dim, dim);
  for (Index n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Operator a_dag = a.adjoint();
  return {std::move(a), std::move(a_dag)};
}

Operator momentum(int cutoff) {
  const auto [a, a_dag] = ladder_ops(cutoff);
  return kI * (a_dag - a);
}

Operator pauli(Axis axis, int site, int n) {
  if (n < 1) throw DomainError("pauli: qubit count must be >= 1");
  if (site < 0 || site >= n) throw DomainError("pauli: site out of range");
  Operator acc = identity(1);
  const Operator id2 = identity(2);
  const Operator s = sigma(axis);
  for (int k = 0; k < n; ++k) acc = kron(acc, k == site ? s : id2);
  return acc;
}

Ket ghz_state(int n) {
  if (n < 1) throw DomainError("ghz_state: qubit count must be >= 1");
  const Index dim = HilbertSpec{n, 0}.dimension();
  Vector v = Vector::Zero(dim);
  const double amp = 1.0 / std::sqrt(2.0);
  v(0) = amp;
  v(dim - 1) = amp;
  return Ket::from_amplitudes(std::move(v));
}

// --------------------------- algebra ---------------------------------------

Operator dagger(const Operator& a) { return a.adjoint(); }

Operator commutator(const Operator& a, const Operator& b) {
  require_same_dim(a.rows(), b.rows(), "commutator");
  return a * b - b * a;
}

Operator anticommutator(const Operator& a, const Operator& b) {
  require_same_dim(a.rows(), b.rows(), "anticommutator");
  return a * b + b * a;
}

bool is_square(const Operator& a) { return a.rows() == a.cols() && a.rows() > 0; }

bool is_finite(const Operator& a) { return a.allFinite(); }

bool is_hermitian(const Operator& a, double tol) {
  if (!is_square(a)) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

Complex expect(const Operator& a, const Ket& psi) {
  require_same_dim(a.rows(), psi.dim(), "expect");
  return psi.amplitudes().dot(a * psi.amplitudes());
}

Complex expect(const Operator& a, const DensityMatrix& rho) {
  require_same_dim(a.rows(), rho.dim(), "expect");
  // tr(A rho) without forming the product.
  return (a.transpose().cwiseProduct(rho.matrix())).sum();
}

Complex expect(const Operator& a, const QuantumState& s) {
  return std::visit([&](const auto& state) { return expect(a, state); }, s);
}

// --------------------------- unitary evolution -----------------------------

UnitaryPropagator::UnitaryPropagator(const Operator& hamiltonian) {
  require_square(hamiltonian, "UnitaryPropagator");
  if (!is_finite(hamiltonian)) throw DomainError("UnitaryPropagator: non-finite Hamiltonian");
  if (!is_hermitian(hamiltonian)) {
    throw DomainError("UnitaryPropagator: Hamiltonian is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (hamiltonian + hamiltonian.adjoint()));
  energies_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

Ket UnitaryPropagator::apply(double t, const Ket& psi) const {
  require_same_dim(vectors_.rows(), psi.dim(), "UnitaryPropagator::apply");
  Vector c = vectors_.adjoint() * psi.amplitudes();
  for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(-kI * energies_(k) * t);
  return Ket::unchecked(vectors_ * c);
}

DensityMatrix UnitaryPropagator::apply(double t, const DensityMatrix& rho) const {
  require_same_dim(vectors_.rows(), rho.dim(), "UnitaryPropagator::apply");
  const Operator u = unitary(t);
  return DensityMatrix::unchecked(u * rho.matrix() * u.adjoint());
}

Operator UnitaryPropagator::unitary(double t) const {
  Vector phases(energies_.size());
  for (Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(-kI * energies_(k) * t);
  return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

Ket matrix_exp_apply(const Operator& hamiltonian, double t, const Ket& psi) {
  return UnitaryPropagator(hamiltonian).apply(t, psi);
}

DensityMatrix matrix_exp_apply(const Operator& hamiltonian, double t, const DensityMatrix& rho) {
  return UnitaryPropagator(hamiltonian).apply(t, rho);
}

}  // namespace zenosim
