#include "zenosim/ramsey.hpp"

#include "zenosim/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace zenosim::ramsey {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Decay exponent of the probe's phase contrast.
double exponent(const RamseyConfig& cfg, double t) {
  const double g = cfg.noise.g(t);
  return cfg.probe == Probe::GHZ ? cfg.n * g : g;
}

constexpr int kScanPoints = 400;
constexpr double kScanFloor = 1e-12;  // smallest t / T considered

}  // namespace

// --------------------------- NoiseFamily -----------------------------------

NoiseFamily NoiseFamily::noiseless() { return NoiseFamily(Noiseless{}); }

NoiseFamily NoiseFamily::markov(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("NoiseFamily::markov: C must be > 0");
  return NoiseFamily(Markov{c});
}

NoiseFamily NoiseFamily::zeno(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("NoiseFamily::zeno: C must be > 0");
  return NoiseFamily(Zeno{c});
}

NoiseFamily NoiseFamily::custom(ScalarFn g, ScalarFn gamma) {
  if (!g) throw DomainError("NoiseFamily::custom: empty g evaluator");
  if (std::abs(g(0.0)) > 1e-12) throw DomainError("NoiseFamily::custom: g(0) must be 0");
  return NoiseFamily(Custom{std::move(g), std::move(gamma)});
}

double NoiseFamily::g(double t) const {
  return std::visit(Overloaded{
                        [](const Noiseless&) { return 0.0; },
                        [t](const Markov& m) { return m.C * t; },
                        [t](const Zeno& z) { return 0.5 * z.C * t * t; },
                        [t](const Custom& c) { return c.g(t); },
                    },
                    kind_);
}

std::string NoiseFamily::name() const {
  return std::visit(Overloaded{
                        [](const Noiseless&) { return std::string("noiseless"); },
                        [](const Markov&) { return std::string("markov"); },
                        [](const Zeno&) { return std::string("zeno"); },
                        [](const Custom&) { return std::string("custom"); },
                    },
                    kind_);
}

lindblad::RateProfile NoiseFamily::lindblad_profile() const {
  using lindblad::RateProfile;
  return std::visit(
      Overloaded{
          [](const Noiseless&) { return RateProfile::constant(0.0); },
          [](const Markov& m) { return RateProfile::constant(0.5 * m.C); },
          [](const Zeno& z) { return RateProfile::linear(0.5 * z.C); },
          [](const Custom& c) {
            ScalarFn g = c.g;
            ScalarFn rate = c.gamma;
            if (!rate) {
              // Five-point stencil, one-sided near t = 0.
              rate = [g](double t) {
                const double h = 1e-4 * std::max(1.0, std::abs(t));
                if (t < 2.0 * h) {
                  return (-3.0 * g(t) + 4.0 * g(t + h) - g(t + 2.0 * h)) / (2.0 * h);
                }
                return (g(t - 2.0 * h) - 8.0 * g(t - h) + 8.0 * g(t + h) - g(t + 2.0 * h)) / (12.0 * h);
              };
            }
            return RateProfile::closed_form([rate](double t) { return 0.5 * rate(t); },
                                            [g](double t) { return 0.5 * g(t); });
          },
      },
      kind_);
}

// --------------------------- errors ----------------------------------------

void RamseyConfig::validate() const {
  if (n < 1) throw DomainError("RamseyConfig: n must be >= 1");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("RamseyConfig: T must be > 0");
  if (t_fixed && (!(*t_fixed > 0.0) || *t_fixed > T)) {
    throw DomainError("RamseyConfig: t_fixed must lie in (0, T]");
  }
}

double log_ramsey_error(const RamseyConfig& cfg, double t) {
  cfg.validate();
  if (!(t > 0.0)) throw DomainError("ramsey_error: t must be > 0");
  if (t > cfg.T) throw DomainError("ramsey_error: t must not exceed T");
  const double n = static_cast<double>(cfg.n);
  const double base = exponent(cfg, t) - 0.5 * std::log(t * cfg.T);
  return cfg.probe == Probe::GHZ ? base - std::log(n) : base - 0.5 * std::log(n);
}

double ramsey_error(const RamseyConfig& cfg, double t) { return std::exp(log_ramsey_error(cfg, t)); }

// --------------------------- optima ----------------------------------------

Optimum optimal_time_numeric(const RamseyConfig& cfg) {
  cfg.validate();
  if (std::holds_alternative<Noiseless>(cfg.noise.kind())) {
    if (!cfg.t_fixed) throw NoInteriorOptimum("optimal_time: noiseless error decreases up to t = T");
    return {*cfg.t_fixed, ramsey_error(cfg, *cfg.t_fixed)};
  }
  // Coarse log-spaced scan to bracket a single interior minimum.
  const double lo = std::log(cfg.T * kScanFloor);
  const double hi = std::log(cfg.T);
  std::vector<double> u(kScanPoints), f(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    u[i] = lo + (hi - lo) * i / (kScanPoints - 1);
    f[i] = log_ramsey_error(cfg, std::min(std::exp(u[i]), cfg.T));
  }
  int best = 0;
  int minima = 0;
  for (int i = 0; i < kScanPoints; ++i) {
    if (f[i] < f[best]) best = i;
    if (i > 0 && i + 1 < kScanPoints && f[i] < f[i - 1] && f[i] <= f[i + 1]) ++minima;
  }
  if (best == 0 || best == kScanPoints - 1) {
    throw NoInteriorOptimum("optimal_time: minimum sits on the boundary of (0, T]");
  }
  if (minima > 1) throw NonUnimodal("optimal_time: error curve has several local minima");

  // Golden section in log t.
  double a = u[best - 1];
  double b = u[best + 1];
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  auto obj = [&](double x) { return log_ramsey_error(cfg, std::exp(x)); };
  double fc = obj(c);
  double fd = obj(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = obj(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = obj(d);
    }
  }
  const double t = std::exp(0.5 * (a + b));
  return {t, ramsey_error(cfg, t)};
}

Optimum optimal_time(const RamseyConfig& cfg) {
  cfg.validate();
  const double n = static_cast<double>(cfg.n);
  const double T = cfg.T;
  const bool ghz = cfg.probe == Probe::GHZ;
  auto checked = [&](double t, double err) {
    if (t > T) throw NoInteriorOptimum("optimal_time: optimum lies beyond the total time T");
    return Optimum{t, err};
  };
  return std::visit(
      Overloaded{
          [&](const Noiseless&) -> Optimum {
            if (!cfg.t_fixed) throw NoInteriorOptimum("optimal_time: noiseless error decreases up to t = T");
            return {*cfg.t_fixed, ramsey_error(cfg, *cfg.t_fixed)};
          },
          [&](const Markov& m) {
            const double err = std::sqrt(2.0 * m.C * std::numbers::e / (n * T));
            return checked(ghz ? 1.0 / (2.0 * n * m.C) : 1.0 / (2.0 * m.C), err);
          },
          [&](const Zeno& z) {
            if (ghz) {
              return checked(1.0 / std::sqrt(2.0 * n * z.C),
                             std::exp(0.25) * std::pow(2.0 * n * z.C, 0.25) / (n * std::sqrt(T)));
            }
            return checked(1.0 / std::sqrt(2.0 * z.C),
                           std::exp(0.25) * std::pow(2.0 * z.C, 0.25) / std::sqrt(n * T));
          },
          [&](const Custom&) { return optimal_time_numeric(cfg); },
      },
      cfg.noise.kind());
}

double enhancement_ratio(int n, const NoiseFamily& noise, double T, Solver solver) {
  RamseyConfig ghz{n, T, noise, Probe::GHZ, std::nullopt};
  RamseyConfig prod{n, T, noise, Probe::Product, std::nullopt};
  ghz.validate();
  if (std::holds_alternative<Noiseless>(noise.kind())) {
    return ramsey_error(prod, T) / ramsey_error(ghz, T);
  }
  auto solve = solver == Solver::ClosedForm ? optimal_time : optimal_time_numeric;
  return solve(prod).error / solve(ghz).error;
}

ScalingCurve scaling_scan(const NoiseFamily& noise, const std::vector<int>& n_list, double T, Solver solver) {
  if (n_list.empty()) throw DomainError("scaling_scan: empty n list");
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) throw DomainError("scaling_scan: n list must be increasing");
  }
  const bool noiseless = std::holds_alternative<Noiseless>(noise.kind());
  auto solve = solver == Solver::ClosedForm ? optimal_time : optimal_time_numeric;
  ScalingCurve curve;
  std::vector<double> xs, ys;
  for (int n : n_list) {
    RamseyConfig ghz{n, T, noise, Probe::GHZ, std::nullopt};
    RamseyConfig prod{n, T, noise, Probe::Product, std::nullopt};
    if (noiseless) {
      ghz.t_fixed = T;
      prod.t_fixed = T;
    }
    const Optimum og = solve(ghz);
    const Optimum op = solve(prod);
    curve.rows.push_back({n, og.t, og.error, op.t, op.error, op.error / og.error});
    xs.push_back(n);
    ys.push_back(op.error / og.error);
  }
  if (xs.size() >= 3) {
    curve.fit = powerlaw_fit(xs, ys);
  } else {
    curve.fit.b = std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

// --------------------------- numeric route ---------------------------------

std::vector<ErrorPoint> error_dynamics_numeric(const RamseyConfig& cfg, const std::vector<double>& t_grid) {
  cfg.validate();
  if (t_grid.empty()) throw DomainError("error_dynamics_numeric: empty time grid");
  for (double t : t_grid) {
    if (!(t > 0.0) || t > cfg.T) throw DomainError("error_dynamics_numeric: times must lie in (0, T]");
  }
  const int m = cfg.probe == Probe::GHZ ? cfg.n : 1;
  if (m > kNumericMaxQubits) throw DimensionError("error_dynamics_numeric: too many qubits for the full density matrix");

  const DensityMatrix rho0 = DensityMatrix::from_ket(ghz_state(m));
  const lindblad::RateProfile profile = cfg.noise.lindblad_profile();

  // Parity observable with the phase offset that centres the fringe at zero detuning.
  const double theta = std::numbers::pi / (2.0 * m);
  const Complex c{std::cos(theta), 0.0};
  const Complex s{std::sin(theta), 0.0};
  Operator readout = identity(1);
  for (int i = 0; i < m; ++i) readout = kron(readout, c * sigma(Axis::X) + s * sigma(Axis::Y));

  // The detuning Hamiltonian commutes with the sigma_z dissipators, so the
  // interaction frame removes it from the stepping and +-h share one trajectory
  // up to exact phases; the difference quotient is then free of integrator noise.
  const double h = 1e-5 / (m * t_grid.back());
  lindblad::StepperOptions opts;
  opts.frame = lindblad::Frame::Interaction;
  opts.rtol = 1e-12;
  opts.atol = 1e-14;
  const auto plus = lindblad::integrate(lindblad::dephasing_problem(m, profile, rho0, t_grid, +h), opts);
  const auto minus = lindblad::integrate(lindblad::dephasing_problem(m, profile, rho0, t_grid, -h), opts);

  std::vector<ErrorPoint> out;
  out.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const double op = expect(readout, plus.states[i].rho).real();
    const double om = expect(readout, minus.states[i].rho).real();
    const double mean = 0.5 * (op + om);
    const double slope = (op - om) / (2.0 * h);
    const double var = 1.0 - mean * mean;
    double err = std::sqrt(var) / std::abs(slope) / std::sqrt(cfg.T / t);
    if (cfg.probe == Probe::Product) err /= std::sqrt(static_cast<double>(cfg.n));
    out.push_back({t, err});
  }
  return out;
}

}  // namespace zenosim::ramsey
