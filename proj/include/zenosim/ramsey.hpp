#pragma once

// Ramsey frequency estimation with product and GHZ probes under dephasing.
//
// Signal convention: a single qubit's phase contrast decays as e^{-g(t)} and a
// GHZ probe's as e^{-n g(t)}. The sigma_z Lindblad equation gives e^{-2 g_L(t)}
// per qubit, so the master-equation rate is half the signal rate:
// C_lindblad = C_signal / 2. Every NoiseFamily constant here is a signal constant.

#include "zenosim/fit.hpp"
#include "zenosim/lindblad.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace zenosim::ramsey {

using lindblad::ScalarFn;

struct Noiseless {};
struct Markov {
  double C = 0.0;  // 1/time, g(t) = C t
};
struct Zeno {
  double C = 0.0;  // 1/time^2, g(t) = C t^2 / 2
};
struct Custom {
  ScalarFn g;
  ScalarFn gamma;  // optional g'(t); differentiated numerically when absent
};

class NoiseFamily {
 public:
  static NoiseFamily noiseless();
  static NoiseFamily markov(double c);
  static NoiseFamily zeno(double c);
  static NoiseFamily custom(ScalarFn g, ScalarFn gamma = {});

  double g(double t) const;
  std::string name() const;
  // sigma_z dephasing rate for the master equation, with the factor 2 applied.
  lindblad::RateProfile lindblad_profile() const;

  using Kind = std::variant<Noiseless, Markov, Zeno, Custom>;
  const Kind& kind() const { return kind_; }

 private:
  explicit NoiseFamily(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

enum class Probe { GHZ, Product };

struct RamseyConfig {
  int n = 1;
  double T = 1.0;  // total averaging time
  NoiseFamily noise = NoiseFamily::noiseless();
  Probe probe = Probe::GHZ;
  std::optional<double> t_fixed;

  void validate() const;
};

// delta omega at interrogation time t with nu = T/t repetitions.
//   Product: e^{g} / sqrt(n t T)      GHZ: e^{n g} / (n sqrt(t T))
double ramsey_error(const RamseyConfig& cfg, double t);
// Natural log of the same; stays finite where the error itself overflows.
double log_ramsey_error(const RamseyConfig& cfg, double t);

struct Optimum {
  double t = 0.0;
  double error = 0.0;
};

// Closed forms for Markov and Zeno; golden-section search for Custom.
// Noiseless has no interior optimum and returns t_fixed when it is set.
Optimum optimal_time(const RamseyConfig& cfg);
// Golden-section search for every family; used to cross-check the closed forms.
Optimum optimal_time_numeric(const RamseyConfig& cfg);

enum class Solver { ClosedForm, Numeric };

// delta omega*_Product / delta omega*_GHZ, each at its own optimum.
// Noiseless compares both probes at t = T.
double enhancement_ratio(int n, const NoiseFamily& noise, double T, Solver solver = Solver::ClosedForm);

struct ScalingRow {
  int n = 0;
  double t_ghz = 0.0;
  double error_ghz = 0.0;
  double t_product = 0.0;
  double error_product = 0.0;
  double r = 0.0;
};

struct ScalingCurve {
  std::vector<ScalingRow> rows;
  PowerLaw fit;  // r = a n^b; b is nan when fewer than 3 rows
};

ScalingCurve scaling_scan(const NoiseFamily& noise, const std::vector<int>& n_list, double T,
                          Solver solver = Solver::ClosedForm);

struct ErrorPoint {
  double t = 0.0;
  double error = 0.0;
};

// Master-equation route: integrate the dephasing problem at detuning +-h,
// read out the parity observable prod_i (cos th sigma_x + sin th sigma_y) with
// th = pi / (2m), and form sqrt(Var O) / |d<O>/d delta| / sqrt(T/t).
// GHZ probes need n <= kNumericMaxQubits; product probes simulate one qubit.
std::vector<ErrorPoint> error_dynamics_numeric(const RamseyConfig& cfg, const std::vector<double>& t_grid);

inline constexpr int kNumericMaxQubits = 6;

}  // namespace zenosim::ramsey
