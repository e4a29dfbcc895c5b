#include "zenosim/criticality.hpp"

#include "zenosim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace zenosim::criticality {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double variance(const Operator& op, const QuantumState& psi) {
  const double m1 = expect(op, psi).real();
  const double m2 = expect(op * op, psi).real();
  return m2 - m1 * m1;
}

Index state_dim(const QuantumState& psi) {
  return std::visit([](const auto& s) { return s.dim(); }, psi);
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median: empty input");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

// --------------------------- ladder framework ------------------------------

LadderFrame build_ladder(const Operator& H0, const Operator& H1, double lambda, double Delta) {
  if (!is_square(H0) || H0.rows() != H1.rows() || H0.cols() != H1.cols()) {
    throw DimensionError("build_ladder: H0 and H1 must be square and of equal size");
  }
  if (!is_hermitian(H0) || !is_hermitian(H1)) throw DomainError("build_ladder: H0 and H1 must be Hermitian");
  LadderFrame f;
  f.H0 = H0;
  f.H1 = H1;
  f.lambda = lambda;
  f.Delta = Delta;
  f.C = -kI * commutator(H0, H1);
  f.D = -kI * commutator(f.hamiltonian(), f.C);
  f.Lambda = kI * Delta * f.C - f.D;
  return f;
}

double check_ladder(const LadderFrame& frame, int interior_cutoff) {
  const Index dim = frame.H0.rows();
  if (interior_cutoff < 0 || interior_cutoff >= dim - 1) {
    throw DomainError("check_ladder: interior cutoff must lie below the truncation level");
  }
  // Right-multiplying by the projector keeps the first interior_cutoff + 1 columns.
  const Index keep = interior_cutoff + 1;
  const Operator res = (commutator(frame.hamiltonian(), frame.Lambda) - frame.Delta * frame.Lambda).leftCols(keep);
  const double denom = frame.Lambda.leftCols(keep).norm();
  if (denom == 0.0) return 0.0;
  return res.norm() / denom;
}

double spectral_spacing(const Operator& H, int max_level, int stride) {
  if (!is_hermitian(H)) throw DomainError("spectral_spacing: H must be Hermitian");
  if (stride < 1 || max_level < stride || max_level >= H.rows()) {
    throw DomainError("spectral_spacing: need 1 <= stride <= max_level < dim");
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(H, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& e = es.eigenvalues();
  std::vector<double> gaps;
  for (int k = 0; k + stride <= max_level; ++k) gaps.push_back(e(k + stride) - e(k));
  return median(std::move(gaps));
}

// --------------------------- Rabi model ------------------------------------

void RabiNormalPhase::validate() const {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("RabiNormalPhase: omega must be > 0");
  if (!(g >= 0.0 && g < 1.0)) throw DomainError("RabiNormalPhase: g must lie in [0, 1)");
  if (cutoff < 2) throw DomainError("RabiNormalPhase: cutoff must be >= 2");
}

double RabiNormalPhase::delta_g() const {
  validate();
  return 2.0 * std::sqrt(1.0 - g * g);
}

Operator RabiNormalPhase::hamiltonian() const {
  validate();
  const auto [a, ad] = ladder_ops(cutoff);
  const Operator x = a + ad;
  return omega * (ad * a) - (omega * g * g / 4.0) * (x * x);
}

Operator RabiNormalPhase::coupling_derivative() const {
  validate();
  const auto [a, ad] = ladder_ops(cutoff);
  const Operator x = a + ad;
  return -(omega * g / 2.0) * (x * x);
}

Operator RabiNormalPhase::momentum() const { return zenosim::momentum(cutoff); }

LadderFrame RabiNormalPhase::ladder() const {
  validate();
  const auto [a, ad] = ladder_ops(cutoff);
  const Operator x = a + ad;
  const Operator h0 = omega * (ad * a);
  const Operator h1 = -(omega / 4.0) * (x * x);
  // The ladder operator moves two quanta; read its gap off the interior spectrum.
  const double delta = spectral_spacing(h0 + g * g * h1, cutoff / 2, 2);
  return build_ladder(h0, h1, g * g, delta);
}

Operator rabi_hamiltonian(double omega, double Omega, double lambda, int cutoff) {
  const auto [a, ad] = ladder_ops(cutoff);
  const Operator idq = identity(2);
  const Operator idb = identity(cutoff + 1);
  return omega * kron(idq, ad * a) + (Omega / 2.0) * kron(sigma(Axis::Z), idb) -
         lambda * kron(sigma(Axis::X), a + ad);
}

// --------------------------- closed-form QFI -------------------------------

double qfi_closed_form(const ClosedFormKind& kind, const QuantumState& psi, double Delta, double t,
                       int bracket_exponent) {
  if (!(Delta > 0.0) || !std::isfinite(Delta)) throw DomainError("qfi_closed_form: Delta must be > 0");
  if (bracket_exponent < 1) throw DomainError("qfi_closed_form: bracket exponent must be >= 1");
  return std::visit(
      Overloaded{
          [&](const GeneralForm& f) {
            const double x = Delta * t;
            return 4.0 * std::pow(std::sin(x) - x, bracket_exponent) / std::pow(Delta, 6) *
                   variance(f.D, psi);
          },
          [&](const RabiForm& f) {
            const Index dim = state_dim(psi);
            if (dim < 3) throw DimensionError("qfi_closed_form: Fock space too small");
            const Operator p = zenosim::momentum(static_cast<int>(dim - 1));
            const double var = variance(p * p, psi);
            const double x = Delta * f.omega * t;
            return 16.0 * f.g * f.g * std::pow(std::sin(x) - x, bracket_exponent) / std::pow(Delta, 6) * var;
          },
      },
      kind);
}

// --------------------------- numeric QFI -----------------------------------

double sld_qfi(const Operator& rho, const Operator& drho, double floor, double negative_tol) {
  if (rho.rows() != drho.rows() || rho.cols() != drho.cols()) throw DimensionError("sld_qfi: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (rho + rho.adjoint()));
  const Eigen::VectorXd& p = es.eigenvalues();
  if (p.minCoeff() < negative_tol) {
    std::ostringstream msg;
    msg << "sld_qfi: eigenvalue " << p.minCoeff() << " below " << negative_tol;
    throw NegativeEigenvalue(msg.str());
  }
  // A negative eigenvalue measures the noise in the near-null subspace; pairs
  // whose weight is within that noise carry no information, only division by it.
  const double cut = std::max(floor, -10.0 * std::min(p.minCoeff(), 0.0));
  const Operator& u = es.eigenvectors();
  const Operator d = u.adjoint() * drho * u;
  const Index n = p.size();
  double f = 0.0;
  for (Index k = 0; k < n; ++k) {
    for (Index j = 0; j < n; ++j) {
      const double s = p(j) + p(k);
      if (s > cut) f += std::norm(d(j, k)) / s;
    }
  }
  return 2.0 * f;
}

double qfi_numeric(const StateFamily& rho_of_g, double g, double h, const QfiOptions& opts) {
  if (!(h > 0.0)) throw DomainError("qfi_numeric: step h must be > 0");
  const Operator rho = rho_of_g(g).matrix();
  auto estimate = [&](double step) {
    const Operator drho = (rho_of_g(g + step).matrix() - rho_of_g(g - step).matrix()) / (2.0 * step);
    return sld_qfi(rho, drho, opts.floor);
  };
  const double f_h = estimate(h);
  if (!opts.richardson) return f_h;
  const double f_half = estimate(0.5 * h);
  const double scale = std::max(std::abs(f_half), 1e-12);
  if (std::abs(f_h - f_half) > opts.richardson_tol * scale) {
    std::ostringstream msg;
    msg << "qfi_numeric: step h = " << h << " gives " << f_h << " against " << f_half << " at h/2";
    throw StepTooLarge(msg.str());
  }
  return f_half;
}

// --------------------------- dissipation -----------------------------------

void DissipationSpec::validate() const {
  for (double v : {kappa1, nbar, kappa2}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("DissipationSpec: rates and nbar must be >= 0");
  }
}

std::vector<lindblad::Dissipator> DissipationSpec::dissipators(int cutoff) const {
  validate();
  using lindblad::RateProfile;
  const auto [a, ad] = ladder_ops(cutoff);
  std::vector<lindblad::Dissipator> out;
  if (kappa1 > 0.0) {
    out.push_back({a, RateProfile::constant(kappa1 * (nbar + 1.0))});
    if (nbar > 0.0) out.push_back({ad, RateProfile::constant(kappa1 * nbar)});
  }
  if (kappa2 > 0.0) out.push_back({a * a, RateProfile::constant(kappa2)});
  return out;
}

// --------------------------- peaks -----------------------------------------

std::vector<double> find_peaks(const std::vector<double>& t, const std::vector<double>& y, double prominence) {
  if (t.size() != y.size()) throw DimensionError("find_peaks: length mismatch");
  std::vector<double> out;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    // Classic prominence: lowest point on each side before the curve climbs above y[i].
    double left = y[i];
    for (std::size_t j = i; j-- > 0;) {
      if (y[j] > y[i]) break;
      left = std::min(left, y[j]);
    }
    double right = y[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (y[j] > y[i]) break;
      right = std::min(right, y[j]);
    }
    const double prom = y[i] - std::max(left, right);
    if (prom <= prominence * std::abs(y[i])) continue;
    const double a = y[i - 1], b = y[i], c = y[i + 1];
    const double curv = a - 2.0 * b + c;
    double shift = 0.0;
    if (curv < 0.0) shift = std::clamp(0.5 * (a - c) / curv, -0.5, 0.5);
    const double dt = shift >= 0.0 ? t[i + 1] - t[i] : t[i] - t[i - 1];
    out.push_back(t[i] + shift * dt);
  }
  return out;
}

int recommended_cutoff(double g) {
  if (!(g >= 0.0 && g < 1.0)) throw DomainError("recommended_cutoff: g must lie in [0, 1)");
  // A vacuum quenched into H_np reaches X variance 1/(1 - g^2); the matching
  // squeezed vacuum has mean photon number nbar. Its photon-number tail beyond
  // N falls like (nbar/(nbar+1))^N; keep it below 1e-4.
  const double v = 1.0 / (1.0 - g * g);
  const double nbar = std::max((v + 1.0 / v) / 4.0 - 0.5, 1e-3);
  const double q = nbar / (nbar + 1.0);
  const int n = static_cast<int>(std::ceil(std::log(1e-4) / std::log(q)));
  return std::max(n, 8);
}

// --------------------------- scans -----------------------------------------

lindblad::StepperOptions ScanOptions::default_stepper() {
  lindblad::StepperOptions s;
  s.rtol = 1e-10;
  s.atol = 1e-13;
  s.dt_init = 1e-3;
  return s;
}

namespace {

struct Cell {
  double g = 0.0;
  DissipationSpec dis;
};

lindblad::MasterEqProblem cell_problem(const RabiNormalPhase& model, double g, const DissipationSpec& dis,
                                       const std::vector<double>& t_grid) {
  RabiNormalPhase m = model;
  m.g = g;
  lindblad::MasterEqProblem p;
  p.hamiltonian = lindblad::Hamiltonian::constant(m.hamiltonian());
  p.dissipators = dis.dissipators(m.cutoff);
  p.rho0 = DensityMatrix::from_ket(Ket::basis(m.cutoff + 1, 0));
  p.t_grid = t_grid;
  return p;
}

double step_for(double g, const ScanOptions& opts) {
  const double h = opts.h_scale * (1.0 - g);
  if (!(h > 0.0)) throw DomainError("scan: finite-difference step vanishes at g = 1");
  return h;
}

// F(t) from lockstep trajectories at g - h, g, g + h (and g +- h/2 with Richardson).
QfiCurve evaluate_cell(const RabiNormalPhase& model, const Cell& cell, const std::vector<double>& t_grid,
                       const ScanOptions& opts, std::optional<RichardsonReport>* richardson) {
  const double h = step_for(cell.g, opts);
  if (cell.g - h < 0.0 || cell.g + h >= 1.0) throw DomainError("scan: g +- h leaves [0, 1)");
  std::vector<double> gs{cell.g, cell.g - h, cell.g + h};
  if (richardson) {
    gs.push_back(cell.g - 0.5 * h);
    gs.push_back(cell.g + 0.5 * h);
  }
  std::vector<lindblad::MasterEqProblem> problems;
  for (double g : gs) problems.push_back(cell_problem(model, g, cell.dis, t_grid));

  RabiNormalPhase m = model;
  m.g = cell.g;
  const auto [a, ad] = ladder_ops(m.cutoff);
  const Operator number = ad * a;

  QfiCurve curve;
  curve.g = cell.g;
  curve.delta_g = m.delta_g();
  curve.t = t_grid;
  curve.F.resize(t_grid.size());
  std::vector<double> f_half(richardson ? t_grid.size() : 0);
  // The engine already certifies positivity down to its own floor; strong
  // damping leaves many near-zero eigenvalues that sit just below -1e-8.
  const double neg = lindblad::kPositivityFloor;
  lindblad::integrate_lockstep(problems, opts.stepper,
                               [&](std::size_t k, double, std::span<const DensityMatrix> s) {
                                 const Operator& rho = s[0].matrix();
                                 curve.F[k] = sld_qfi(rho, (s[2].matrix() - s[1].matrix()) / (2.0 * h), opts.sld_floor, neg);
                                 if (richardson) {
                                   f_half[k] = sld_qfi(rho, (s[4].matrix() - s[3].matrix()) / h, opts.sld_floor, neg);
                                 }
                                 curve.max_photons = std::max(curve.max_photons, expect(number, s[0]).real());
                               });

  const auto it = std::max_element(curve.F.begin(), curve.F.end());
  curve.F_max = *it;
  curve.t_max = t_grid[static_cast<std::size_t>(it - curve.F.begin())];
  curve.peak_times = find_peaks(curve.t, curve.F, opts.peak_prominence);
  if (curve.peak_times.size() >= 2) {
    curve.period = (curve.peak_times.back() - curve.peak_times.front()) /
                   static_cast<double>(curve.peak_times.size() - 1);
  } else {
    curve.period = kNaN;
  }

  if (richardson) {
    RichardsonReport rep;
    rep.g = cell.g;
    const auto jt = std::max_element(f_half.begin(), f_half.end());
    rep.F_h = curve.F_max;
    rep.F_half = *jt;
    for (std::size_t k = 0; k < f_half.size(); ++k) {
      if (f_half[k] < 1e-3 * rep.F_half) continue;
      rep.rel_diff = std::max(rep.rel_diff, std::abs(curve.F[k] - f_half[k]) / f_half[k]);
    }
    *richardson = rep;
    if (rep.rel_diff > opts.richardson_tol) {
      std::ostringstream msg;
      msg << "scan: Richardson check at g = " << cell.g << " differs by " << rep.rel_diff << " (tolerance "
          << opts.richardson_tol << ")";
      throw StepTooLarge(msg.str());
    }
  }
  return curve;
}

QfiScan run_cells(const RabiNormalPhase& model, const std::vector<Cell>& cells, std::size_t critical,
                  const std::vector<double>& t_grid, const ScanOptions& opts) {
  if (cells.empty()) throw DomainError("scan: empty parameter list");
  if (t_grid.size() < 3) throw DomainError("scan: need at least 3 output times");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("scan: t grid must be increasing");
  }
  if (t_grid.front() < 0.0) throw DomainError("scan: t grid must start at t >= 0");
  model.validate();
  for (const auto& c : cells) {
    c.dis.validate();
    RabiNormalPhase m = model;
    m.g = c.g;
    m.validate();
  }

  QfiScan scan;
  scan.curves.resize(cells.size());
  std::optional<RichardsonReport> rich;
  parallel_for(cells.size(), opts.execution, [&](std::size_t i) {
    const bool check = opts.richardson && i == critical;
    scan.curves[i] = evaluate_cell(model, cells[i], t_grid, opts, check ? &rich : nullptr);
  });
  scan.richardson = rich;

  if (opts.truncation_audit) {
    const QfiCurve& ref = scan.curves[critical];
    RabiNormalPhase doubled = model;
    doubled.cutoff = 2 * model.cutoff;
    // F_max only needs the window up to a little past the original argmax.
    std::vector<double> window;
    for (double t : t_grid) {
      if (t <= 1.25 * ref.t_max + 1e-12 || window.size() < 3) window.push_back(t);
    }
    ScanOptions quiet = opts;
    const QfiCurve big = evaluate_cell(doubled, cells[critical], window, quiet, nullptr);
    AuditReport rep;
    rep.g = cells[critical].g;
    rep.cutoff = model.cutoff;
    rep.doubled_cutoff = doubled.cutoff;
    rep.F_max = ref.F_max;
    rep.F_max_doubled = big.F_max;
    rep.rel_change = std::abs(big.F_max - ref.F_max) / std::max(std::abs(big.F_max), 1e-300);
    scan.audit = rep;
    if (rep.rel_change > opts.audit_tol) {
      std::ostringstream msg;
      msg << "truncation audit: F_max moves by " << rep.rel_change << " when N_F goes " << rep.cutoff << " -> "
          << rep.doubled_cutoff << " at g = " << rep.g;
      throw TruncationAuditFailure(msg.str());
    }
  }
  return scan;
}

}  // namespace

QfiScan dissipative_qfi_scan(const RabiNormalPhase& model, const DissipationSpec& dis,
                             const std::vector<double>& g_list, const std::vector<double>& t_grid,
                             const ScanOptions& opts) {
  std::vector<Cell> cells;
  std::size_t critical = 0;
  for (std::size_t i = 0; i < g_list.size(); ++i) {
    cells.push_back({g_list[i], dis});
    if (g_list[i] > g_list[critical]) critical = i;
  }
  QfiScan scan = run_cells(model, cells, critical, t_grid, opts);
  if (scan.curves.size() >= 3) {
    std::vector<double> x, y;
    for (const auto& c : scan.curves) {
      x.push_back(c.delta_g);
      y.push_back(c.F_max);
    }
    scan.fit = powerlaw_fit(x, y);
  }
  return scan;
}

QfiScan thermal_scan(const RabiNormalPhase& model, double kappa1, const std::vector<double>& nbar_list,
                     const std::vector<double>& t_grid, const ScanOptions& opts) {
  std::vector<Cell> cells;
  std::size_t critical = 0;
  for (std::size_t i = 0; i < nbar_list.size(); ++i) {
    cells.push_back({model.g, DissipationSpec{kappa1, nbar_list[i], 0.0}});
    if (nbar_list[i] > nbar_list[critical]) critical = i;
  }
  QfiScan scan = run_cells(model, cells, critical, t_grid, opts);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (nbar_list[i] <= 0.0) continue;
    x.push_back(nbar_list[i]);
    y.push_back(scan.curves[i].F_max);
  }
  if (x.size() >= 3) scan.fit = powerlaw_fit(x, y);
  return scan;
}

}  // namespace zenosim::criticality
