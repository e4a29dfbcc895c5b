#pragma once

// Classical emulation of bath engineering: random-phase cosine-series noise
//
//   beta_m(t) = sum_{j=1}^{Nc} alpha_m F(w_j) w_j cos(w_j t + phi_j^(m)),  w_j = j w0
//
// drives H = H_QS + sum_m beta_m(t) Z_m with diagonal couplings Z_m, and the
// ensemble of stochastic Schrodinger trajectories is averaged into rho(t).

#include "zenosim/operators.hpp"
#include "zenosim/parallel.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace zenosim::bath {

enum class Shape {
  Flat,      // F = 1/w, equal line weights
  Ohmic,     // F = 1, [F w]^2 grows as w^2
  OneOverF,  // F = w^{-3/2}, [F w]^2 = 1/w
};

struct NoiseChannel {
  double alpha = 1.0;      // frequency units
  Eigen::VectorXd weights;  // diagonal of Z_m in the computational basis
};

struct NoiseSynthSpec {
  std::vector<NoiseChannel> channels;
  std::function<double(double)> F;  // spectral shape F(w)
  double omega0 = 1.0;
  int Nc = 1;

  void validate() const;
  Index dim() const;
  double line_frequency(int j) const { return j * omega0; }
  // alpha_m F(w_j) w_j, the amplitude of line j on channel m (j = 1..Nc).
  double amplitude(std::size_t m, int j) const;
  double cutoff() const { return Nc * omega0; }
};

std::function<double(double)> shape_function(Shape s);

// Single sigma_z-coupled qubit, weights (+1, -1).
NoiseSynthSpec dephasing_spec(double alpha, Shape shape, double omega0, int Nc);

// --------------------------- phases ----------------------------------------

struct PhaseDraw {
  std::uint64_t seed = 0;
  Eigen::MatrixXd phases;  // channels x Nc, uniform on [0, 2 pi)
};

// Counter-based split: the k-th trajectory's seed depends only on (master, k).
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t k);

PhaseDraw sample_phases(const NoiseSynthSpec& spec, std::uint64_t seed);

// --------------------------- noise statistics ------------------------------

double beta(const NoiseSynthSpec& spec, const PhaseDraw& draw, std::size_t m, double t);
// (1/(t1 - t0)) int_{t0}^{t1} beta, exact for the cosine series.
double beta_average(const NoiseSynthSpec& spec, const PhaseDraw& draw, std::size_t m, double t0, double t1);

// S_m(tau) = (alpha^2/2) sum_j [F(w_j) w_j]^2 cos(w_j tau)
double analytic_correlation(const NoiseSynthSpec& spec, double tau, std::size_t m = 0);

struct Line {
  double omega = 0.0;
  double weight = 0.0;  // pi alpha^2/2 [F w]^2, at both +omega and -omega
};
std::vector<Line> analytic_psd(const NoiseSynthSpec& spec, std::size_t m = 0);

struct CorrelationEstimate {
  std::vector<double> tau;
  std::vector<double> S;
  std::vector<double> stderr_;
};

// Phase-average estimator of <beta(t0) beta(t0 + tau)> over M draws.
CorrelationEstimate estimate_correlation(const NoiseSynthSpec& spec, int M, const std::vector<double>& tau_grid,
                                         std::uint64_t seed, double t_origin = 0.0, std::size_t m = 0);

// For sigma_z dephasing driven by channel m: the time-local Lindblad rate
// gamma(t) = 2 int_0^t S(tau) d tau and its line function g(t) = int_0^t gamma,
// so that the Gaussian coherence factor is exp(-2 g(t)).
double dephasing_rate(const NoiseSynthSpec& spec, double t, std::size_t m = 0);
double dephasing_line(const NoiseSynthSpec& spec, double t, std::size_t m = 0);
// Exact phase average for a single (+1, -1) channel: prod_j J0(4 A_j sin(w_j t / 2) / w_j).
double coherence_exact(const NoiseSynthSpec& spec, double t, std::size_t m = 0);

// --------------------------- trajectories ----------------------------------

enum class Sampling {
  Midpoint,     // beta sampled at the step midpoint
  StepAverage,  // exact step average of beta; exact when H_QS is diagonal
};

struct TrajectoryOptions {
  double dt = 0.0;  // <= 0: the resolution limit (1/20) 2 pi / (Nc w0) divided by 4
  Sampling sampling = Sampling::StepAverage;
};

inline constexpr double kResolutionFraction = 1.0 / 20.0;

// Largest step that resolves the fastest line.
double max_step(const NoiseSynthSpec& spec);

// Piecewise-constant propagation; returns psi at each grid time. Throws
// StepTooCoarse when dt exceeds max_step(spec).
std::vector<Ket> trajectory_evolve(const Operator& H_QS, const NoiseSynthSpec& spec, const PhaseDraw& draw,
                                   const Ket& psi0, const std::vector<double>& t_grid,
                                   const TrajectoryOptions& opts = {});

struct Ensemble {
  int M = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> t;
  std::vector<Operator> rho;                // averaged density matrix per time
  std::vector<Eigen::MatrixXd> stderr_re;  // standard error of Re rho_ij
  std::vector<Eigen::MatrixXd> stderr_im;  // standard error of Im rho_ij
};

// rho(t) = (1/M) sum_k |psi_k(t)><psi_k(t)| with trajectory k seeded by
// trajectory_seed(master_seed, k). Trajectories run in blocks; each block is
// reduced in index order, so the result is bit-identical for any worker count.
Ensemble ensemble_average(const Operator& H_QS, const NoiseSynthSpec& spec, const Ket& psi0,
                          const std::vector<double>& t_grid, int M, std::uint64_t master_seed,
                          const TrajectoryOptions& opts = {}, Execution exec = Execution::Parallel);

// --------------------------- scale mapping ---------------------------------

// H_S / H_QS = C_m / S_m solved for the simulator-side correlation S_m.
double scale_map(double H_S_scale, double C_m_scale, double H_QS_scale);
// Recovers C_m from S_m.
double scale_map_inverse(double H_S_scale, double S_m_scale, double H_QS_scale);

}  // namespace zenosim::bath
