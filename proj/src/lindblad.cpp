#include "zenosim/lindblad.hpp"

#include "zenosim/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace zenosim::lindblad {

namespace {

constexpr Complex kI{0.0, 1.0};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double simpson(const ScalarFn& f, double a, double b, double fa, double fm, double fb, double whole,
               double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const ScalarFn& f, double a, double b, double tol = 1e-13) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

double max_abs(const Operator& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void hermitize(Operator& m) {
  const Operator adj = m.adjoint();
  m = 0.5 * (m + adj);
}

// Right-hand side in either frame, with the jump operators already
// transformed to the working basis.
class RhsKernel {
 public:
  RhsKernel(const MasterEqProblem& problem, Frame frame) : problem_(problem), frame_(frame) {
    const Index d = problem.rho0.dim();
    if (frame == Frame::Interaction) {
      if (!problem.hamiltonian.is_static()) {
        throw ValidationError("integrate: the interaction frame needs a time-independent Hamiltonian");
      }
      UnitaryPropagator prop(problem.hamiltonian.static_matrix());
      energies_ = prop.energies();
      basis_ = prop.eigenvectors();
    }
    for (const auto& dis : problem.dissipators) {
      Operator l = dis.jump;
      Operator ldl = l.adjoint() * l;
      if (frame == Frame::Interaction) {
        l = basis_.adjoint() * l * basis_;
        ldl = basis_.adjoint() * ldl * basis_;
      }
      jumps_.push_back(std::move(l));
      ldl_.push_back(std::move(ldl));
    }
    autonomous_ = problem.hamiltonian.is_static() && frame == Frame::Lab;
    for (const auto& dis : problem.dissipators) {
      if (!std::holds_alternative<ConstantRate>(dis.rate.kind())) autonomous_ = false;
    }
    if (autonomous_) k_cached_ = effective(problem.t0);
    tmp_.resize(d, d);
  }

  Operator to_working(const Operator& rho_lab) const {
    if (frame_ == Frame::Lab) return rho_lab;
    return basis_.adjoint() * rho_lab * basis_;
  }

  Operator to_lab(const Operator& rho_work, double t) const {
    if (frame_ == Frame::Lab) return rho_work;
    const Vector u = phases(t);
    const Operator rot = u.conjugate() * u.transpose();  // conj of Phi
    return basis_ * rot.cwiseProduct(rho_work) * basis_.adjoint();
  }

  bool negative_rate_seen() const { return negative_rate_; }

  void operator()(double t, const Operator& rho, Operator& out) {
    rates_.resize(jumps_.size());
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      rates_[k] = problem_.dissipators[k].rate.rate(t);
      if (rates_[k] < 0.0) negative_rate_ = true;
    }
    if (frame_ == Frame::Lab) {
      const Operator& k = autonomous_ ? k_cached_ : (k_scratch_ = effective(t));
      tmp_.noalias() = k * rho;
      out = tmp_ + tmp_.adjoint();
      for (std::size_t j = 0; j < jumps_.size(); ++j) {
        if (rates_[j] == 0.0) continue;
        tmp_.noalias() = jumps_[j] * rho;
        out.noalias() += rates_[j] * (tmp_ * jumps_[j].adjoint());
      }
      return;
    }
    // Interaction frame: X~ = Phi o X_e with Phi_mn = exp(i (E_m - E_n)(t - t0)).
    const Vector u = phases(t);
    phi_ = u * u.adjoint();
    k_scratch_.setZero(rho.rows(), rho.cols());
    for (std::size_t j = 0; j < jumps_.size(); ++j) {
      if (rates_[j] == 0.0) continue;
      k_scratch_ -= (0.5 * rates_[j]) * ldl_[j];
    }
    k_scratch_ = k_scratch_.cwiseProduct(phi_);
    tmp_.noalias() = k_scratch_ * rho;
    out = tmp_ + tmp_.adjoint();
    for (std::size_t j = 0; j < jumps_.size(); ++j) {
      if (rates_[j] == 0.0) continue;
      l_scratch_ = jumps_[j].cwiseProduct(phi_);
      tmp_.noalias() = l_scratch_ * rho;
      out.noalias() += rates_[j] * (tmp_ * l_scratch_.adjoint());
    }
  }

 private:
  Operator effective(double t) const {
    Operator k = -kI * problem_.hamiltonian.at(t);
    for (std::size_t j = 0; j < jumps_.size(); ++j) {
      const double g = problem_.dissipators[j].rate.rate(t);
      if (g != 0.0) k -= (0.5 * g) * ldl_[j];
    }
    return k;
  }

  Vector phases(double t) const {
    const double tau = t - problem_.t0;
    Vector u(energies_.size());
    for (Index m = 0; m < u.size(); ++m) u(m) = std::exp(kI * (energies_(m) * tau));
    return u;
  }

  const MasterEqProblem& problem_;
  Frame frame_;
  Eigen::VectorXd energies_;
  Operator basis_;
  std::vector<Operator> jumps_;
  std::vector<Operator> ldl_;
  std::vector<double> rates_;
  bool autonomous_ = false;
  bool negative_rate_ = false;
  Operator k_cached_;
  Operator k_scratch_;
  Operator l_scratch_;
  Operator phi_;
  Operator tmp_;
};

// One classical RK4 step given the first stage slope.
void rk4_step(RhsKernel& f, double t, const Operator& y, const Operator& k1, double h,
              Operator& y_out) {
  Operator k2, k3, k4;
  f(t + 0.5 * h, y + (0.5 * h) * k1, k2);
  f(t + 0.5 * h, y + (0.5 * h) * k2, k3);
  f(t + h, y + h * k3, k4);
  y_out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_output(const Operator& rho, double t, bool negative_rates, IntegrationStats& stats) {
  if (!rho.allFinite()) {
    throw NonConvergence("integrate: non-finite state at t = " + std::to_string(t));
  }
  const double tr_err = std::abs(rho.trace() - Complex{1.0, 0.0});
  if (tr_err > kOutputTraceTol) {
    throw NonConvergence("integrate: trace drift " + std::to_string(tr_err) + " at t = " +
                         std::to_string(t));
  }
  if (max_abs(rho - rho.adjoint()) > kOutputHermitianTol) {
    throw NonConvergence("integrate: Hermiticity lost at t = " + std::to_string(t));
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  stats.min_eigenvalue = std::min(stats.min_eigenvalue, lo);
  if (lo < kPositivityFloor) {
    std::ostringstream msg;
    msg << "min eigenvalue " << lo << " at t = " << t;
    if (negative_rates) {
      stats.warnings.push_back("positivity: " + msg.str() + " (negative rate present)");
    } else {
      throw PositivityViolation("integrate: " + msg.str());
    }
  }
}

}  // namespace

// --------------------------- RateProfile -----------------------------------

RateProfile RateProfile::constant(double c) {
  if (!std::isfinite(c)) throw DomainError("RateProfile::constant: non-finite rate");
  return RateProfile(ConstantRate{c});
}

RateProfile RateProfile::linear(double c) {
  if (!std::isfinite(c)) throw DomainError("RateProfile::linear: non-finite slope");
  return RateProfile(LinearRate{c});
}

RateProfile RateProfile::tabulated(std::vector<double> t, std::vector<double> gamma) {
  if (t.size() != gamma.size() || t.size() < 2) {
    throw DomainError("RateProfile::tabulated: need >= 2 samples of matching length");
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw DomainError("RateProfile::tabulated: grid not strictly increasing");
  }
  return RateProfile(TabulatedRate{std::move(t), std::move(gamma)});
}

RateProfile RateProfile::closed_form(ScalarFn gamma, ScalarFn line) {
  if (!gamma) throw DomainError("RateProfile::closed_form: empty evaluator");
  return RateProfile(ClosedFormRate{std::move(gamma), std::move(line)});
}

double RateProfile::rate(double t) const {
  return std::visit(
      Overloaded{
          [](const ConstantRate& r) { return r.c; },
          [t](const LinearRate& r) { return r.c * t; },
          [t](const TabulatedRate& r) {
            if (t < r.t.front() || t > r.t.back()) {
              throw DomainError("RateProfile: t outside tabulated window");
            }
            const auto it = std::upper_bound(r.t.begin(), r.t.end(), t);
            const std::size_t hi = std::min<std::size_t>(it - r.t.begin(), r.t.size() - 1);
            const std::size_t lo = hi - 1;
            const double w = (t - r.t[lo]) / (r.t[hi] - r.t[lo]);
            return (1.0 - w) * r.gamma[lo] + w * r.gamma[hi];
          },
          [t](const ClosedFormRate& r) { return r.gamma(t); },
      },
      kind_);
}

double RateProfile::line(double t) const {
  if (t < 0.0) throw DomainError("line_function: t must be >= 0");
  return std::visit(
      Overloaded{
          [t](const ConstantRate& r) { return r.c * t; },
          [t](const LinearRate& r) { return 0.5 * r.c * t * t; },
          [this, t](const TabulatedRate& r) {
            require_window(0.0, t);
            // Trapezoid over the samples, the last interval cut at t.
            double acc = 0.0;
            for (std::size_t i = 1; i < r.t.size() && r.t[i - 1] < t; ++i) {
              const double b = std::min(r.t[i], t);
              const double a = std::max(r.t[i - 1], 0.0);
              if (b <= a) continue;
              acc += 0.5 * (b - a) * (rate(a) + rate(b));
            }
            return acc;
          },
          [t](const ClosedFormRate& r) {
            if (r.line) return r.line(t);
            return adaptive_simpson(r.gamma, 0.0, t);
          },
      },
      kind_);
}

void RateProfile::require_window(double t0, double t1) const {
  if (const auto* tab = std::get_if<TabulatedRate>(&kind_)) {
    if (t0 < tab->t.front() || t1 > tab->t.back()) {
      throw DomainError("RateProfile: integration window exceeds tabulated range");
    }
  }
}

double line_function(const RateProfile& profile, double t) { return profile.line(t); }

// --------------------------- Hamiltonian -----------------------------------

Hamiltonian Hamiltonian::constant(Operator h) {
  if (!is_square(h)) throw DimensionError("Hamiltonian: not square");
  Hamiltonian out;
  out.dim_ = h.rows();
  out.h_ = std::move(h);
  return out;
}

Hamiltonian Hamiltonian::time_dependent(Index dim, std::function<Operator(double)> h) {
  if (dim <= 0 || !h) throw ValidationError("Hamiltonian: invalid time-dependent evaluator");
  Hamiltonian out;
  out.dim_ = dim;
  out.fn_ = std::move(h);
  return out;
}

Operator Hamiltonian::at(double t) const {
  if (!fn_) return h_;
  Operator h = fn_(t);
  if (h.rows() != dim_ || h.cols() != dim_) throw DimensionError("Hamiltonian: evaluator changed dimension");
  return h;
}

// --------------------------- problem ---------------------------------------

void MasterEqProblem::validate() const {
  const Index d = rho0.dim();
  if (hamiltonian.dim() != d) throw DimensionError("MasterEqProblem: Hamiltonian/state dimension mismatch");
  if (hamiltonian.is_static() && !is_hermitian(hamiltonian.static_matrix())) {
    throw DomainError("MasterEqProblem: Hamiltonian is not Hermitian");
  }
  for (const auto& dis : dissipators) {
    if (dis.jump.rows() != d || dis.jump.cols() != d) {
      throw DimensionError("MasterEqProblem: jump operator dimension mismatch");
    }
    if (!dis.jump.allFinite()) throw DomainError("MasterEqProblem: non-finite jump operator");
  }
  if (t_grid.empty()) throw DomainError("MasterEqProblem: empty output grid");
  if (t_grid.front() < t0) throw DomainError("MasterEqProblem: output time before t0");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("MasterEqProblem: output grid not increasing");
  }
  for (const auto& dis : dissipators) dis.rate.require_window(t0, t_grid.back());
  // Re-run the state invariants on rho0.
  (void)DensityMatrix::from_matrix(rho0.matrix());
}

Operator lindblad_rhs(const MasterEqProblem& problem, const Operator& rho, double t) {
  if (rho.rows() != problem.rho0.dim() || rho.cols() != problem.rho0.dim()) {
    throw DimensionError("lindblad_rhs: state dimension mismatch");
  }
  const Operator h = problem.hamiltonian.at(t);
  Operator out = -kI * (h * rho - rho * h);
  for (const auto& dis : problem.dissipators) {
    const double g = dis.rate.rate(t);
    if (g == 0.0) continue;
    const Operator& l = dis.jump;
    const Operator ldl = l.adjoint() * l;
    out += g * (l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl));
  }
  return out;
}

// --------------------------- integrate -------------------------------------

std::vector<IntegrationStats> integrate_lockstep(std::span<const MasterEqProblem> problems,
                                                 const StepperOptions& opts, const LockstepObserver& observe) {
  if (problems.empty()) throw ValidationError("integrate: empty problem group");
  for (const auto& p : problems) p.validate();
  const auto& lead = problems.front();
  for (const auto& p : problems) {
    if (p.rho0.dim() != lead.rho0.dim() || p.t0 != lead.t0 || p.t_grid != lead.t_grid) {
      throw ValidationError("integrate: lockstep problems must share dimension, t0 and output grid");
    }
  }
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw DomainError("integrate: tolerances must be positive");
  if (!(opts.dt_init > 0.0) && !(opts.fixed_dt > 0.0)) throw DomainError("integrate: dt_init must be positive");

  const std::size_t m = problems.size();
  std::vector<RhsKernel> kernels;
  kernels.reserve(m);
  for (const auto& p : problems) kernels.emplace_back(p, opts.frame);

  std::vector<IntegrationStats> stats(m);
  std::vector<Operator> y(m), k1(m), y_full(m), y_half(m), y_two(m), k_mid(m);
  std::vector<DensityMatrix> snapshot;
  snapshot.reserve(m);
  for (std::size_t i = 0; i < m; ++i) y[i] = kernels[i].to_working(problems[i].rho0.matrix());

  double t = lead.t0;
  const double dt_max = opts.dt_max > 0.0 ? opts.dt_max : std::numeric_limits<double>::infinity();
  double h_prop = std::min(opts.fixed_dt > 0.0 ? opts.fixed_dt : opts.dt_init, dt_max);
  long accepted = 0;
  long rejected = 0;
  long steps = 0;

  for (std::size_t k = 0; k < lead.t_grid.size(); ++k) {
    const double t_out = lead.t_grid[k];
    while (t < t_out) {
      if (++steps > opts.max_steps) throw NonConvergence("integrate: step budget exhausted");
      const double remaining = t_out - t;
      const bool clipped = h_prop >= remaining;
      const double h = clipped ? remaining : h_prop;
      for (std::size_t i = 0; i < m; ++i) kernels[i](t, y[i], k1[i]);

      if (opts.fixed_dt > 0.0) {
        for (std::size_t i = 0; i < m; ++i) {
          rk4_step(kernels[i], t, y[i], k1[i], h, y_full[i]);
          std::swap(y[i], y_full[i]);
          hermitize(y[i]);
        }
        t = clipped ? t_out : t + h;
        ++accepted;
        continue;
      }

      // Step doubling: one full step against two half steps, shared error norm.
      double err = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        rk4_step(kernels[i], t, y[i], k1[i], h, y_full[i]);
        rk4_step(kernels[i], t, y[i], k1[i], 0.5 * h, y_half[i]);
        kernels[i](t + 0.5 * h, y_half[i], k_mid[i]);
        rk4_step(kernels[i], t + 0.5 * h, y_half[i], k_mid[i], 0.5 * h, y_two[i]);
        const double scale = opts.atol + opts.rtol * max_abs(y_two[i]);
        err = std::max(err, max_abs(y_two[i] - y_full[i]) / 15.0 / scale);
      }
      if (!std::isfinite(err)) {
        ++rejected;
        h_prop = 0.25 * h;
      } else if (err <= 1.0) {
        for (std::size_t i = 0; i < m; ++i) {
          std::swap(y[i], y_two[i]);
          hermitize(y[i]);
        }
        t = clipped ? t_out : t + h;
        ++accepted;
        const double grow = err > 0.0 ? std::min(4.0, 0.9 * std::pow(err, -0.2)) : 4.0;
        const double next = std::min(h * grow, dt_max);
        // A step shortened to land on an output time should not shrink the next one.
        h_prop = std::min(clipped ? std::max(h_prop, next) : next, dt_max);
      } else {
        ++rejected;
        h_prop = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
      }
      if (h_prop < opts.dt_min) {
        throw NonConvergence("integrate: step size underflow at t = " + std::to_string(t));
      }
    }
    snapshot.clear();
    for (std::size_t i = 0; i < m; ++i) {
      Operator rho = kernels[i].to_lab(y[i], t);
      hermitize(rho);
      check_output(rho, t_out, kernels[i].negative_rate_seen(), stats[i]);
      snapshot.push_back(DensityMatrix::unchecked(std::move(rho)));
    }
    observe(k, t_out, snapshot);
  }
  for (auto& st : stats) {
    st.accepted = accepted;
    st.rejected = rejected;
  }
  return stats;
}

std::vector<IntegrationResult> integrate_lockstep(std::span<const MasterEqProblem> problems,
                                                  const StepperOptions& opts) {
  std::vector<IntegrationResult> results(problems.size());
  auto stats = integrate_lockstep(problems, opts,
                                  [&](std::size_t, double t, std::span<const DensityMatrix> states) {
                                    for (std::size_t i = 0; i < states.size(); ++i) {
                                      results[i].states.push_back({t, states[i]});
                                    }
                                  });
  for (std::size_t i = 0; i < results.size(); ++i) results[i].stats = std::move(stats[i]);
  return results;
}

IntegrationResult integrate(const MasterEqProblem& problem, const StepperOptions& opts) {
  return std::move(integrate_lockstep(std::span(&problem, 1), opts).front());
}

// --------------------------- analytic dephasing ----------------------------

DensityMatrix dephasing_analytic(int n, const ScalarFn& line, const DensityMatrix& rho0, double t,
                                 double omega0) {
  const Index dim = HilbertSpec{n, 0}.dimension();
  if (rho0.dim() != dim) throw DimensionError("dephasing_analytic: state dimension mismatch");
  if (t < 0.0) throw DomainError("dephasing_analytic: t must be >= 0");
  const double g = line ? line(t) : 0.0;
  auto energy = [&](Index b) {
    const int ones = std::popcount(static_cast<unsigned long long>(b));
    return 0.5 * omega0 * static_cast<double>(n - 2 * ones);
  };
  Operator out = rho0.matrix();
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      const int k = std::popcount(static_cast<unsigned long long>(i ^ j));
      const double decay = std::exp(-2.0 * k * g);
      const Complex phase = std::exp(-kI * ((energy(i) - energy(j)) * t));
      out(i, j) *= decay * phase;
    }
  }
  return DensityMatrix::unchecked(std::move(out));
}

DensityMatrix dephasing_analytic(int n, const RateProfile& profile, const DensityMatrix& rho0,
                                 double t, double omega0) {
  return dephasing_analytic(
      n, [&profile](double s) { return profile.line(s); }, rho0, t, omega0);
}

MasterEqProblem dephasing_problem(int n, const RateProfile& profile, const DensityMatrix& rho0,
                                  std::vector<double> t_grid, double omega0) {
  const Index dim = HilbertSpec{n, 0}.dimension();
  Operator h = Operator::Zero(dim, dim);
  MasterEqProblem p;
  for (int i = 0; i < n; ++i) {
    const Operator z = pauli(Axis::Z, i, n);
    h += 0.5 * omega0 * z;
    p.dissipators.push_back({z, profile});
  }
  p.hamiltonian = Hamiltonian::constant(std::move(h));
  p.rho0 = rho0;
  p.t_grid = std::move(t_grid);
  return p;
}

}  // namespace zenosim::lindblad
