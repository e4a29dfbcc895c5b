#include "zenosim/bath.hpp"

#include "zenosim/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace zenosim::bath {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kEnsembleBlock = 256;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t x) { return splitmix64(x); }

// sin(x)/x with the removable singularity filled in.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

void check_channel(const NoiseSynthSpec& spec, std::size_t m) {
  if (m >= spec.channels.size())
    throw DomainError("noise channel " + std::to_string(m) + " out of range (" +
                      std::to_string(spec.channels.size()) + " channels)");
}

// Weight difference between basis states 0 and 1, the coherence a channel dephases.
double coherence_weight(const NoiseSynthSpec& spec, std::size_t m) {
  const auto& w = spec.channels[m].weights;
  if (w.size() < 2) throw DimensionError("coherence needs at least two basis states");
  return w(0) - w(1);
}

bool is_diagonal(const Operator& h) {
  for (Index c = 0; c < h.cols(); ++c)
    for (Index r = 0; r < h.rows(); ++r)
      if (r != c && h(r, c) != Complex(0.0, 0.0)) return false;
  return true;
}

// Line amplitudes and frequencies, tabulated once per trajectory.
struct LineTable {
  Eigen::MatrixXd amp;    // channels x Nc
  Eigen::VectorXd omega;  // Nc

  explicit LineTable(const NoiseSynthSpec& spec)
      : amp(static_cast<Index>(spec.channels.size()), spec.Nc), omega(spec.Nc) {
    for (int j = 1; j <= spec.Nc; ++j) {
      omega(j - 1) = spec.line_frequency(j);
      for (std::size_t m = 0; m < spec.channels.size(); ++m)
        amp(static_cast<Index>(m), j - 1) = spec.amplitude(m, j);
    }
  }
};

// beta_m at the step midpoint, times the per-line sinc factor for step averages.
double step_beta(const LineTable& lines, const PhaseDraw& draw, Index m, double t_mid, double h,
                 Sampling sampling) {
  double s = 0.0;
  for (Index j = 0; j < lines.omega.size(); ++j) {
    const double w = lines.omega(j);
    double term = lines.amp(m, j) * std::cos(w * t_mid + draw.phases(m, j));
    if (sampling == Sampling::StepAverage) term *= sinc(0.5 * w * h);
    s += term;
  }
  return s;
}

}  // namespace

// --------------------------- spec ------------------------------------------

void NoiseSynthSpec::validate() const {
  if (channels.empty()) throw DomainError("noise spec needs at least one channel");
  if (!F) throw DomainError("noise spec has no spectral shape F");
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw DomainError("omega0 must be > 0");
  if (Nc < 1) throw DomainError("Nc must be >= 1");
  const Index d = channels.front().weights.size();
  if (d < 1) throw DimensionError("channel weights are empty");
  for (const auto& ch : channels) {
    if (ch.weights.size() != d) throw DimensionError("channel weights have mismatched sizes");
    if (!ch.weights.allFinite()) throw DomainError("channel weights must be finite");
    if (!(ch.alpha >= 0.0) || !std::isfinite(ch.alpha)) throw DomainError("alpha must be finite and >= 0");
  }
  for (int j = 1; j <= Nc; ++j) {
    const double f = F(line_frequency(j));
    if (!std::isfinite(f)) throw DomainError("F is not finite at line " + std::to_string(j));
  }
}

Index NoiseSynthSpec::dim() const { return channels.empty() ? 0 : channels.front().weights.size(); }

double NoiseSynthSpec::amplitude(std::size_t m, int j) const {
  const double w = line_frequency(j);
  return channels[m].alpha * F(w) * w;
}

std::function<double(double)> shape_function(Shape s) {
  switch (s) {
    case Shape::Flat:
      return [](double w) { return 1.0 / w; };
    case Shape::Ohmic:
      return [](double) { return 1.0; };
    case Shape::OneOverF:
      return [](double w) { return std::pow(w, -1.5); };
  }
  throw DomainError("unknown noise shape");
}

NoiseSynthSpec dephasing_spec(double alpha, Shape shape, double omega0, int Nc) {
  NoiseSynthSpec spec;
  NoiseChannel ch;
  ch.alpha = alpha;
  ch.weights = Eigen::Vector2d(1.0, -1.0);
  spec.channels.push_back(ch);
  spec.F = shape_function(shape);
  spec.omega0 = omega0;
  spec.Nc = Nc;
  spec.validate();
  return spec;
}

// --------------------------- phases ----------------------------------------

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t k) { return mix(master ^ mix(k)); }

PhaseDraw sample_phases(const NoiseSynthSpec& spec, std::uint64_t seed) {
  PhaseDraw d;
  d.seed = seed;
  d.phases.resize(static_cast<Index>(spec.channels.size()), spec.Nc);
  std::uint64_t state = seed;
  for (Index m = 0; m < d.phases.rows(); ++m)
    for (Index j = 0; j < d.phases.cols(); ++j) {
      // Top 53 bits give a uniform double on [0, 1), identical on every platform.
      const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      d.phases(m, j) = kTwoPi * u;
    }
  return d;
}

// --------------------------- noise statistics ------------------------------

double beta(const NoiseSynthSpec& spec, const PhaseDraw& draw, std::size_t m, double t) {
  check_channel(spec, m);
  double s = 0.0;
  for (int j = 1; j <= spec.Nc; ++j)
    s += spec.amplitude(m, j) * std::cos(spec.line_frequency(j) * t + draw.phases(static_cast<Index>(m), j - 1));
  return s;
}

double beta_average(const NoiseSynthSpec& spec, const PhaseDraw& draw, std::size_t m, double t0, double t1) {
  check_channel(spec, m);
  if (!(t1 > t0)) return beta(spec, draw, m, t0);
  const double h = t1 - t0;
  const double mid = 0.5 * (t0 + t1);
  double s = 0.0;
  for (int j = 1; j <= spec.Nc; ++j) {
    const double w = spec.line_frequency(j);
    s += spec.amplitude(m, j) * std::cos(w * mid + draw.phases(static_cast<Index>(m), j - 1)) * sinc(0.5 * w * h);
  }
  return s;
}

double analytic_correlation(const NoiseSynthSpec& spec, double tau, std::size_t m) {
  check_channel(spec, m);
  double s = 0.0;
  for (int j = 1; j <= spec.Nc; ++j) {
    const double a = spec.amplitude(m, j);
    s += 0.5 * a * a * std::cos(spec.line_frequency(j) * tau);
  }
  return s;
}

std::vector<Line> analytic_psd(const NoiseSynthSpec& spec, std::size_t m) {
  check_channel(spec, m);
  std::vector<Line> lines;
  lines.reserve(static_cast<std::size_t>(spec.Nc));
  for (int j = 1; j <= spec.Nc; ++j) {
    const double a = spec.amplitude(m, j);
    lines.push_back({spec.line_frequency(j), 0.5 * std::numbers::pi * a * a});
  }
  return lines;
}

CorrelationEstimate estimate_correlation(const NoiseSynthSpec& spec, int M, const std::vector<double>& tau_grid,
                                         std::uint64_t seed, double t_origin, std::size_t m) {
  spec.validate();
  check_channel(spec, m);
  if (M < 2) throw DomainError("correlation estimate needs M >= 2");
  const std::size_t n = tau_grid.size();
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  for (int k = 0; k < M; ++k) {
    const PhaseDraw d = sample_phases(spec, trajectory_seed(seed, static_cast<std::uint64_t>(k)));
    const double b0 = beta(spec, d, m, t_origin);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = b0 * beta(spec, d, m, t_origin + tau_grid[i]);
      sum[i] += p;
      sumsq[i] += p * p;
    }
  }
  CorrelationEstimate est;
  est.tau = tau_grid;
  est.S.resize(n);
  est.stderr_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / M;
    const double var = std::max(0.0, (sumsq[i] / M - mean * mean) * M / (M - 1.0));
    est.S[i] = mean;
    est.stderr_[i] = std::sqrt(var / M);
  }
  return est;
}

double dephasing_rate(const NoiseSynthSpec& spec, double t, std::size_t m) {
  check_channel(spec, m);
  const double dw = coherence_weight(spec, m);
  double s = 0.0;
  for (int j = 1; j <= spec.Nc; ++j) {
    const double a = spec.amplitude(m, j);
    const double w = spec.line_frequency(j);
    s += a * a * std::sin(w * t) / w;
  }
  return 0.25 * dw * dw * s;
}

double dephasing_line(const NoiseSynthSpec& spec, double t, std::size_t m) {
  check_channel(spec, m);
  const double dw = coherence_weight(spec, m);
  double s = 0.0;
  for (int j = 1; j <= spec.Nc; ++j) {
    const double a = spec.amplitude(m, j);
    const double w = spec.line_frequency(j);
    // 1 - cos(w t) = 2 sin^2(w t / 2) avoids cancellation at small t.
    const double sh = std::sin(0.5 * w * t);
    s += a * a * 2.0 * sh * sh / (w * w);
  }
  return 0.25 * dw * dw * s;
}

double coherence_exact(const NoiseSynthSpec& spec, double t, std::size_t m) {
  check_channel(spec, m);
  const double dw = coherence_weight(spec, m);
  double c = 1.0;
  for (int j = 1; j <= spec.Nc; ++j) {
    const double w = spec.line_frequency(j);
    // J0 is even; libstdc++ rejects negative arguments.
    c *= std::cyl_bessel_j(0.0, std::abs(2.0 * dw * spec.amplitude(m, j) * std::sin(0.5 * w * t) / w));
  }
  return c;
}

// --------------------------- trajectories ----------------------------------

double max_step(const NoiseSynthSpec& spec) { return kResolutionFraction * kTwoPi / spec.cutoff(); }

std::vector<Ket> trajectory_evolve(const Operator& H_QS, const NoiseSynthSpec& spec, const PhaseDraw& draw,
                                   const Ket& psi0, const std::vector<double>& t_grid,
                                   const TrajectoryOptions& opts) {
  spec.validate();
  const Index d = spec.dim();
  if (!is_square(H_QS) || H_QS.rows() != d)
    throw DimensionError("H_QS must be " + std::to_string(d) + "x" + std::to_string(d));
  if (!is_hermitian(H_QS)) throw DomainError("H_QS is not Hermitian");
  if (psi0.dim() != d) throw DimensionError("initial state dimension does not match the noise couplings");
  if (draw.phases.rows() != static_cast<Index>(spec.channels.size()) || draw.phases.cols() != spec.Nc)
    throw DimensionError("phase draw does not match the noise spec");
  if (t_grid.empty()) throw DomainError("empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= t_grid[i - 1])) throw DomainError("time grid must be non-decreasing");

  const double limit = max_step(spec);
  const double dt = opts.dt > 0.0 ? opts.dt : 0.25 * limit;
  if (dt > limit * (1.0 + 1e-12))
    throw StepTooCoarse("trajectory step " + std::to_string(dt) + " exceeds the resolution limit " +
                        std::to_string(limit) + " for cutoff " + std::to_string(spec.cutoff()));

  const LineTable lines(spec);
  const bool diagonal = is_diagonal(H_QS);
  const Eigen::VectorXd h_diag = H_QS.diagonal().real();
  const Index n_ch = static_cast<Index>(spec.channels.size());

  Vector psi = psi0.amplitudes();
  std::vector<Ket> out;
  out.reserve(t_grid.size());
  out.push_back(Ket::unchecked(psi));

  Eigen::VectorXd energy(d);
  Operator H(d, d);
  Eigen::SelfAdjointEigenSolver<Operator> es;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double span = t_grid[i] - t_grid[i - 1];
    const auto n_sub = static_cast<long>(std::ceil(span / dt - 1e-9));
    const double h = n_sub > 0 ? span / static_cast<double>(n_sub) : 0.0;
    for (long s = 0; s < n_sub; ++s) {
      const double t_mid = t_grid[i - 1] + (static_cast<double>(s) + 0.5) * h;
      energy.setZero();
      for (Index m = 0; m < n_ch; ++m)
        energy += step_beta(lines, draw, m, t_mid, h, opts.sampling) * spec.channels[static_cast<std::size_t>(m)].weights;
      if (diagonal) {
        for (Index k = 0; k < d; ++k) psi(k) *= std::polar(1.0, -(h_diag(k) + energy(k)) * h);
      } else {
        H = H_QS;
        H.diagonal() += energy.cast<Complex>();
        es.compute(H);
        const Eigen::VectorXcd phase =
            (es.eigenvalues() * (-h)).unaryExpr([](double x) { return std::polar(1.0, x); });
        psi = es.eigenvectors() * (phase.asDiagonal() * (es.eigenvectors().adjoint() * psi));
      }
    }
    out.push_back(Ket::unchecked(psi));
  }
  return out;
}

Ensemble ensemble_average(const Operator& H_QS, const NoiseSynthSpec& spec, const Ket& psi0,
                          const std::vector<double>& t_grid, int M, std::uint64_t master_seed,
                          const TrajectoryOptions& opts, Execution exec) {
  spec.validate();
  if (M < 1) throw DomainError("ensemble size M must be >= 1");
  const Index d = spec.dim();
  const std::size_t nt = t_grid.size();

  Ensemble ens;
  ens.M = M;
  ens.master_seed = master_seed;
  ens.t = t_grid;
  ens.seeds.resize(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) ens.seeds[static_cast<std::size_t>(k)] = trajectory_seed(master_seed, static_cast<std::uint64_t>(k));

  std::vector<Operator> sum(nt, Operator::Zero(d, d));
  std::vector<Eigen::MatrixXd> sq_re(nt, Eigen::MatrixXd::Zero(d, d));
  std::vector<Eigen::MatrixXd> sq_im(nt, Eigen::MatrixXd::Zero(d, d));

  std::vector<std::vector<Ket>> block;
  for (std::size_t start = 0; start < static_cast<std::size_t>(M); start += kEnsembleBlock) {
    const std::size_t count = std::min(kEnsembleBlock, static_cast<std::size_t>(M) - start);
    block.assign(count, {});
    parallel_for(count, exec, [&](std::size_t i) {
      const PhaseDraw draw = sample_phases(spec, ens.seeds[start + i]);
      block[i] = trajectory_evolve(H_QS, spec, draw, psi0, t_grid, opts);
    });
    // Fixed-order reduction: trajectory index ascending, whatever ran where.
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t k = 0; k < nt; ++k) {
        const Vector& a = block[i][k].amplitudes();
        const Operator p = a * a.adjoint();
        sum[k] += p;
        sq_re[k] += p.real().cwiseAbs2();
        sq_im[k] += p.imag().cwiseAbs2();
      }
  }

  ens.rho.resize(nt);
  ens.stderr_re.resize(nt);
  ens.stderr_im.resize(nt);
  const double inv = 1.0 / M;
  for (std::size_t k = 0; k < nt; ++k) {
    ens.rho[k] = sum[k] * inv;
    if (M < 2) {
      ens.stderr_re[k] = Eigen::MatrixXd::Constant(d, d, std::nan(""));
      ens.stderr_im[k] = Eigen::MatrixXd::Constant(d, d, std::nan(""));
      continue;
    }
    const double bessel = static_cast<double>(M) / (M - 1.0);
    const Eigen::MatrixXd var_re = ((sq_re[k] * inv - ens.rho[k].real().cwiseAbs2()) * bessel).cwiseMax(0.0);
    const Eigen::MatrixXd var_im = ((sq_im[k] * inv - ens.rho[k].imag().cwiseAbs2()) * bessel).cwiseMax(0.0);
    ens.stderr_re[k] = (var_re * inv).cwiseSqrt();
    ens.stderr_im[k] = (var_im * inv).cwiseSqrt();
  }
  return ens;
}

// --------------------------- scale mapping ---------------------------------

namespace {
void check_scale(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be > 0");
}
}  // namespace

double scale_map(double H_S_scale, double C_m_scale, double H_QS_scale) {
  check_scale(H_S_scale, "H_S scale");
  check_scale(C_m_scale, "C_m scale");
  check_scale(H_QS_scale, "H_QS scale");
  return C_m_scale * H_QS_scale / H_S_scale;
}

double scale_map_inverse(double H_S_scale, double S_m_scale, double H_QS_scale) {
  check_scale(H_S_scale, "H_S scale");
  check_scale(S_m_scale, "S_m scale");
  check_scale(H_QS_scale, "H_QS scale");
  return S_m_scale * H_S_scale / H_QS_scale;
}

}  // namespace zenosim::bath
