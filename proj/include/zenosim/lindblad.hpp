#pragma once

// Lindblad master-equation integration with time-dependent rates:
//
//   d rho/dt = -i[H(t), rho] + sum_k gamma_k(t) (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})
//
// plus closed-form pure-dephasing solutions used as an oracle.

#include "zenosim/operators.hpp"

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace zenosim::lindblad {

using ScalarFn = std::function<double(double)>;

// --------------------------- rate profiles ---------------------------------

struct ConstantRate {
  double c = 0.0;  // 1/time
};

struct LinearRate {
  double c = 0.0;  // 1/time^2, gamma(t) = c t
};

struct TabulatedRate {
  std::vector<double> t;
  std::vector<double> gamma;
};

struct ClosedFormRate {
  ScalarFn gamma;
  ScalarFn line;  // optional antiderivative with line(0) = 0; quadrature otherwise
};

class RateProfile {
 public:
  static RateProfile constant(double c);
  static RateProfile linear(double c);
  // Linear interpolation between samples; grid must be strictly increasing.
  static RateProfile tabulated(std::vector<double> t, std::vector<double> gamma);
  static RateProfile closed_form(ScalarFn gamma, ScalarFn line = {});

  double rate(double t) const;
  // g(t) = int_0^t gamma.
  double line(double t) const;

  // Throws DomainError if the profile cannot be evaluated on [t0, t1].
  void require_window(double t0, double t1) const;

  using Kind = std::variant<ConstantRate, LinearRate, TabulatedRate, ClosedFormRate>;
  const Kind& kind() const { return kind_; }

 private:
  explicit RateProfile(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

double line_function(const RateProfile& profile, double t);

// --------------------------- problem definition ----------------------------

struct Dissipator {
  Operator jump;
  RateProfile rate = RateProfile::constant(0.0);
};

class Hamiltonian {
 public:
  static Hamiltonian constant(Operator h);
  // Evaluated at the stepper's stage times.
  static Hamiltonian time_dependent(Index dim, std::function<Operator(double)> h);

  Operator at(double t) const;
  bool is_static() const { return !fn_; }
  Index dim() const { return dim_; }
  const Operator& static_matrix() const { return h_; }

 private:
  Index dim_ = 0;
  Operator h_;
  std::function<Operator(double)> fn_;
};

struct MasterEqProblem {
  Hamiltonian hamiltonian = Hamiltonian::constant(Operator::Zero(1, 1));
  std::vector<Dissipator> dissipators;
  DensityMatrix rho0 = DensityMatrix::maximally_mixed(1);
  double t0 = 0.0;
  std::vector<double> t_grid;  // strictly increasing output times, all >= t0

  // Throws ValidationError on inconsistent dimensions, grids or rate windows.
  void validate() const;
};

// d rho/dt at time t.
Operator lindblad_rhs(const MasterEqProblem& problem, const Operator& rho, double t);

// --------------------------- integration -----------------------------------

enum class Frame {
  Lab,
  // Rotating frame of a time-independent H, worked in its eigenbasis. Step
  // sizes are then set by the dissipators alone.
  Interaction,
};

struct StepperOptions {
  double dt_init = 1e-2;
  double rtol = 1e-10;
  double atol = 1e-12;
  double dt_min = 1e-12;
  double dt_max = 0.0;       // <= 0: unbounded
  double fixed_dt = 0.0;     // > 0: plain RK4 with this step, no error control
  long max_steps = 50'000'000;
  Frame frame = Frame::Lab;
};

struct TimedState {
  double t;
  DensityMatrix rho;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  double min_eigenvalue = 1.0;  // smallest seen at output times
  std::vector<std::string> warnings;
};

struct IntegrationResult {
  std::vector<TimedState> states;
  IntegrationStats stats;
};

// Classical RK4 with step-doubling error control on the full density matrix.
// Monitors at every output time: trace 1 +- 1e-8, Hermiticity 1e-8 and
// min eigenvalue >= -1e-6. A positivity violation while some rate is
// negative is recorded as a warning; otherwise it throws PositivityViolation.
IntegrationResult integrate(const MasterEqProblem& problem, const StepperOptions& opts = {});

// Integrates several problems of equal dimension on one shared step sequence,
// with the error norm taken over the whole group. Finite differences across
// the group then see correlated truncation errors instead of step jitter.
std::vector<IntegrationResult> integrate_lockstep(std::span<const MasterEqProblem> problems,
                                                  const StepperOptions& opts = {});

// Streaming form: observe(k, t_k, states) sees the lab-frame states at each
// output time instead of storing them.
using LockstepObserver =
    std::function<void(std::size_t, double, std::span<const DensityMatrix>)>;
std::vector<IntegrationStats> integrate_lockstep(std::span<const MasterEqProblem> problems,
                                                 const StepperOptions& opts, const LockstepObserver& observe);

inline constexpr double kOutputTraceTol = 1e-8;
inline constexpr double kOutputHermitianTol = 1e-8;
inline constexpr double kPositivityFloor = -1e-6;

// --------------------------- analytic pure dephasing -----------------------

// Independent identical sigma_z baths on n qubits plus H = sum_i (omega0/2) sigma_z^i.
// Entry (i, j) picks up exp(-2 k g(t)) with k = popcount(i ^ j), and the
// free-evolution phase exp(-i (E_i - E_j) t).
DensityMatrix dephasing_analytic(int n, const ScalarFn& line, const DensityMatrix& rho0, double t,
                                 double omega0 = 0.0);
DensityMatrix dephasing_analytic(int n, const RateProfile& profile, const DensityMatrix& rho0,
                                 double t, double omega0 = 0.0);

// The matching master-equation problem: one sigma_z dissipator per qubit.
MasterEqProblem dephasing_problem(int n, const RateProfile& profile, const DensityMatrix& rho0,
                                  std::vector<double> t_grid, double omega0 = 0.0);

}  // namespace zenosim::lindblad
