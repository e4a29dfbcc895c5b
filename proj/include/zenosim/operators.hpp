#pragma once

// Dense operator algebra over qubit registers and truncated bosonic modes.
//
// Conventions: hbar = 1, Hamiltonians in angular-frequency units, qubit 0 is
// the leftmost tensor factor (most significant bit of the basis index), and
// the Fock space {|0>, ..., |N_F>} is hard-truncated so that a_dag|N_F> = 0.

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <variant>

namespace zenosim {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Index kMaxDimension = 4096;

// Tolerances attached to the state invariants.
inline constexpr double kKetNormTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kMinEigenvalueTol = -1e-8;

struct HilbertSpec {
  int n_qubits = 0;
  int boson_cutoff = 0;  // N_F; 0 means no bosonic mode

  // 2^n_qubits * (N_F + 1); throws DimensionError past kMaxDimension.
  Index dimension() const;
};

class Ket {
 public:
  // Throws DomainError unless | ||amps|| - 1 | <= tol.
  static Ket from_amplitudes(Vector amps, double tol = kKetNormTol);
  static Ket basis(Index dim, Index index);
  // Normalizes; throws DomainError on a zero vector.
  static Ket normalized(Vector amps);
  // Skips the norm check. Used by propagators that monitor norm themselves.
  static Ket unchecked(Vector amps);

  const Vector& amplitudes() const { return amps_; }
  Index dim() const { return amps_.size(); }
  double norm() const { return amps_.norm(); }

 private:
  explicit Ket(Vector amps) : amps_(std::move(amps)) {}
  Vector amps_;
};

class DensityMatrix {
 public:
  // Validates trace, Hermiticity and the eigenvalue floor.
  static DensityMatrix from_matrix(Operator rho);
  static DensityMatrix from_ket(const Ket& psi);
  // Skips validation. Used by integrators that run their own monitors.
  static DensityMatrix unchecked(Operator rho);
  static DensityMatrix maximally_mixed(Index dim);

  const Operator& matrix() const { return rho_; }
  Index dim() const { return rho_.rows(); }
  Complex trace() const { return rho_.trace(); }
  double purity() const;
  double min_eigenvalue() const;

 private:
  explicit DensityMatrix(Operator rho) : rho_(std::move(rho)) {}
  Operator rho_;
};

using QuantumState = std::variant<Ket, DensityMatrix>;

enum class Axis { X, Y, Z };

// --------------------------- construction ----------------------------------

Operator identity(Index dim);
Operator sigma(Axis axis);

// Tensor product; the result dimension must not exceed max_dim.
Operator kron(const Operator& a, const Operator& b, Index max_dim = kMaxDimension);
Operator kron_all(std::span<const Operator> factors, Index max_dim = kMaxDimension);

struct LadderPair {
  Operator a;
  Operator a_dag;
};

// Annihilation/creation on {|0>..|N_F>}; requires N_F >= 1.
LadderPair ladder_ops(int cutoff);

// Canonical momentum P = i(a_dag - a).
Operator momentum(int cutoff);

// I x ... x sigma_axis x ... x I with sigma at position `site` of `n`.
Operator pauli(Axis axis, int site, int n);

// (|0...0> + |1...1>)/sqrt(2).
Ket ghz_state(int n);

// --------------------------- algebra ---------------------------------------

Operator dagger(const Operator& a);
Operator commutator(const Operator& a, const Operator& b);
Operator anticommutator(const Operator& a, const Operator& b);

bool is_square(const Operator& a);
bool is_finite(const Operator& a);
bool is_hermitian(const Operator& a, double tol = kHermitianTol);

Complex expect(const Operator& a, const Ket& psi);
Complex expect(const Operator& a, const DensityMatrix& rho);
Complex expect(const Operator& a, const QuantumState& s);

// --------------------------- unitary evolution -----------------------------

// exp(-iHt) via the Hermitian eigendecomposition, reusable across times.
class UnitaryPropagator {
 public:
  explicit UnitaryPropagator(const Operator& hamiltonian);

  Ket apply(double t, const Ket& psi) const;
  DensityMatrix apply(double t, const DensityMatrix& rho) const;
  Operator unitary(double t) const;

  const Eigen::VectorXd& energies() const { return energies_; }
  const Operator& eigenvectors() const { return vectors_; }

 private:
  Eigen::VectorXd energies_;
  Operator vectors_;
};

// Throws DomainError when H is not Hermitian.
Ket matrix_exp_apply(const Operator& hamiltonian, double t, const Ket& psi);
DensityMatrix matrix_exp_apply(const Operator& hamiltonian, double t, const DensityMatrix& rho);

}  // namespace zenosim
