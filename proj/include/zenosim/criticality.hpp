#pragma once

// Criticality-enhanced sensing near the normal-phase boundary of the Rabi model.
//
// Ladder framework: for H = H0 + lambda H1 build C = -i[H0, H1],
// D = -i[H, C] and Lambda = i Delta C - D; an equally spaced spectrum means
// [H, Lambda] = Delta Lambda.
//
// Normal phase (Omega/omega -> infinity, 0 <= g < 1):
//   H_np = omega a^dag a - (omega g^2 / 4)(a + a^dag)^2
// Its excitation energy is omega sqrt(1 - g^2), and Lambda moves two quanta,
// so the ladder gap is omega Delta_g with Delta_g = 2 sqrt(1 - g^2).

#include "zenosim/fit.hpp"
#include "zenosim/lindblad.hpp"
#include "zenosim/operators.hpp"
#include "zenosim/parallel.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace zenosim::criticality {

// --------------------------- ladder framework ------------------------------

struct LadderFrame {
  Operator H0;
  Operator H1;
  double lambda = 0.0;
  double Delta = 0.0;
  Operator C;
  Operator D;
  Operator Lambda;

  Operator hamiltonian() const { return H0 + lambda * H1; }
};

// Throws DomainError on non-Hermitian or mismatched inputs.
LadderFrame build_ladder(const Operator& H0, const Operator& H1, double lambda, double Delta);

// ||([H, Lambda] - Delta Lambda) P|| / ||Lambda P|| with P projecting on Fock
// levels <= interior_cutoff (Frobenius norms). Returns 0 when Lambda P = 0.
double check_ladder(const LadderFrame& frame, int interior_cutoff);

// Median of E_{k+stride} - E_k over the eigenvalues of H with k + stride <= max_level.
double spectral_spacing(const Operator& H, int max_level, int stride = 1);

// --------------------------- Rabi model ------------------------------------

struct RabiNormalPhase {
  double omega = 1.0;
  double g = 0.0;
  int cutoff = 80;  // N_F

  void validate() const;  // 0 <= g < 1, omega > 0, cutoff >= 2
  double delta_g() const;
  Operator hamiltonian() const;
  // d H_np / d g
  Operator coupling_derivative() const;
  Operator momentum() const;
  // H0 = omega a^dag a, H1 = -(omega/4)(a + a^dag)^2, lambda = g^2, Delta = omega Delta_g.
  LadderFrame ladder() const;
};

// omega a^dag a + (Omega/2) sigma_z - lambda (a + a^dag) sigma_x, qubit first.
Operator rabi_hamiltonian(double omega, double Omega, double lambda, int cutoff);

// --------------------------- closed-form QFI -------------------------------

struct GeneralForm {
  Operator D;  // variance operator
};
struct RabiForm {
  double g = 0.0;
  double omega = 1.0;
};
using ClosedFormKind = std::variant<GeneralForm, RabiForm>;

inline constexpr int kDefaultBracketExponent = 2;

// General: 4 [sin(Delta t) - Delta t]^p / Delta^6 * Var_psi(D)
// Rabi:    16 g^2 [sin(Delta w t) - Delta w t]^p / Delta^6 * (<P^4> - <P^2>^2)
// For Rabi, Delta is the dimensionless gap and psi lives on the Fock space.
double qfi_closed_form(const ClosedFormKind& kind, const QuantumState& psi, double Delta, double t,
                       int bracket_exponent = kDefaultBracketExponent);

// --------------------------- numeric QFI -----------------------------------

inline constexpr double kSldFloor = 1e-12;
inline constexpr double kQfiNegativeTol = -1e-8;

// 2 sum_{p_j + p_k > floor} |<j|drho|k>|^2 / (p_j + p_k) in the eigenbasis of rho.
// Throws NegativeEigenvalue when rho has an eigenvalue below negative_tol.
double sld_qfi(const Operator& rho, const Operator& drho, double floor = kSldFloor,
               double negative_tol = kQfiNegativeTol);

using StateFamily = std::function<DensityMatrix(double)>;

struct QfiOptions {
  bool richardson = true;
  double richardson_tol = 1e-3;  // relative, against the halved step
  double floor = kSldFloor;
};

// Central difference in g; with richardson the h/2 estimate must agree within
// richardson_tol or StepTooLarge is thrown. Returns the h/2 value in that case.
double qfi_numeric(const StateFamily& rho_of_g, double g, double h, const QfiOptions& opts = {});

// --------------------------- dissipative scans -----------------------------

struct DissipationSpec {
  double kappa1 = 0.0;
  double nbar = 0.0;
  double kappa2 = 0.0;

  void validate() const;
  std::vector<lindblad::Dissipator> dissipators(int cutoff) const;
};

struct QfiCurve {
  double g = 0.0;
  double delta_g = 0.0;
  std::vector<double> t;
  std::vector<double> F;
  double F_max = 0.0;
  double t_max = 0.0;
  std::vector<double> peak_times;  // prominent local maxima, parabola-refined
  double period = 0.0;             // mean peak spacing; nan with < 2 peaks
  double max_photons = 0.0;        // max <a^dag a> along the central trajectory
};

struct RichardsonReport {
  double g = 0.0;
  double F_h = 0.0;
  double F_half = 0.0;
  double rel_diff = 0.0;
};

struct AuditReport {
  double g = 0.0;
  int cutoff = 0;
  int doubled_cutoff = 0;
  double F_max = 0.0;
  double F_max_doubled = 0.0;
  double rel_change = 0.0;
};

struct QfiScan {
  std::vector<QfiCurve> curves;
  std::optional<PowerLaw> fit;  // F_max = a x^b over delta_g (or nbar for thermal scans)
  std::optional<RichardsonReport> richardson;
  std::optional<AuditReport> audit;
};

struct ScanOptions {
  double h_scale = 1e-4;  // h = h_scale (1 - g)
  // Richardson halving and truncation audit run on the cell closest to g = 1.
  bool richardson = true;
  double richardson_tol = 1e-3;
  bool truncation_audit = true;
  double audit_tol = 5e-3;
  double peak_prominence = 1e-3;  // relative rise and fall needed to count a peak
  // Integrated states carry ~1e-10 noise in their near-null eigenvalues, which
  // the bare 1e-12 floor turns into spikes; pairs below this sum are dropped.
  double sld_floor = 1e-7;
  lindblad::StepperOptions stepper = default_stepper();
  Execution execution = Execution::Parallel;

  static lindblad::StepperOptions default_stepper();
};

// Vacuum start, Lindblad evolution under H_np with the DissipationSpec channels, F(g, t)
// from three lockstep trajectories at g and g +- h.
QfiScan dissipative_qfi_scan(const RabiNormalPhase& model, const DissipationSpec& dis,
                             const std::vector<double>& g_list, const std::vector<double>& t_grid,
                             const ScanOptions& opts = {});

// F_max against nbar at fixed g; the fit abscissa is nbar (entries with nbar = 0 are skipped).
QfiScan thermal_scan(const RabiNormalPhase& model, double kappa1, const std::vector<double>& nbar_list,
                     const std::vector<double>& t_grid, const ScanOptions& opts = {});

// Prominent local maxima of a sampled curve, refined by a parabola through
// the three bracketing samples.
std::vector<double> find_peaks(const std::vector<double>& t, const std::vector<double>& y,
                               double prominence);

// Fock levels needed so that a squeezed vacuum with the normal-phase
// squeezing at g keeps < 1e-4 weight above the cutoff (heuristic used by validation).
int recommended_cutoff(double g);

}  // namespace zenosim::criticality
