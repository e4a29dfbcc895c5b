#include "zenosim/experiment.hpp"

#include "zenosim/bath.hpp"
#include "zenosim/criticality.hpp"
#include "zenosim/error.hpp"
#include "zenosim/parallel.hpp"
#include "zenosim/ramsey.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <variant>

#ifndef ZENOSIM_VERSION
#define ZENOSIM_VERSION "unknown"
#endif

namespace zenosim::experiment {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// --------------------------- parameter reader ------------------------------

// Typed access to the flat parameter map. Type and range problems are
// collected instead of thrown, so validate() reports all of them at once.
class Params {
 public:
  Params(const json& p, std::vector<std::string>& errors) : p_(p), errors_(errors) {
    if (!p_.is_object()) errors_.push_back("parameters must be a JSON object");
  }

  bool has(const std::string& key) const { return p_.is_object() && p_.contains(key); }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = fetch(key);
    if (!v) return missing(key, def);
    if (!v->is_number()) return bad(key, "a number");
    return v->get<double>();
  }

  int integer(const std::string& key, std::optional<int> def = std::nullopt) {
    const json* v = fetch(key);
    if (!v) {
      if (def) return *def;
      errors_.push_back("missing parameter '" + key + "'");
      return 0;
    }
    if (!v->is_number_integer()) {
      bad(key, "an integer");
      return 0;
    }
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = fetch(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      errors_.push_back("parameter '" + key + "' must be a boolean");
      return def;
    }
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> def, const std::vector<std::string>& choices) {
    const json* v = fetch(key);
    if (!v) {
      if (def) return *def;
      errors_.push_back("missing parameter '" + key + "'");
      return {};
    }
    if (!v->is_string()) {
      errors_.push_back("parameter '" + key + "' must be a string");
      return def.value_or("");
    }
    const auto s = v->get<std::string>();
    if (std::find(choices.begin(), choices.end(), s) == choices.end()) {
      std::string msg = "parameter '" + key + "' must be one of:";
      for (const auto& c : choices) msg += " " + c;
      errors_.push_back(msg);
    }
    return s;
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    const json* v = fetch(key);
    if (!v) {
      errors_.push_back("missing parameter '" + key + "'");
      return out;
    }
    if (!v->is_array() || v->empty()) {
      errors_.push_back("parameter '" + key + "' must be a non-empty list of numbers");
      return out;
    }
    for (const auto& x : *v) {
      if (!x.is_number()) {
        errors_.push_back("parameter '" + key + "' must contain only numbers");
        return {};
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) {
    std::vector<int> out;
    const json* v = fetch(key);
    if (!v) {
      errors_.push_back("missing parameter '" + key + "'");
      return out;
    }
    if (!v->is_array() || v->empty()) {
      errors_.push_back("parameter '" + key + "' must be a non-empty list of integers");
      return out;
    }
    for (const auto& x : *v) {
      if (!x.is_number_integer()) {
        errors_.push_back("parameter '" + key + "' must contain only integers");
        return {};
      }
      out.push_back(x.get<int>());
    }
    return out;
  }

  void require(bool ok, const std::string& msg) {
    if (!ok) errors_.push_back(msg);
  }

  // Rejects every key that no accessor asked for.
  void finish() {
    if (!p_.is_object()) return;
    for (const auto& [k, v] : p_.items())
      if (!used_.count(k)) errors_.push_back("unknown parameter '" + k + "'");
  }

  std::vector<std::string>& errors() { return errors_; }

 private:
  const json* fetch(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return nullptr;
    return &p_.at(key);
  }
  double missing(const std::string& key, std::optional<double> def) {
    if (def) return *def;
    errors_.push_back("missing parameter '" + key + "'");
    return kNaN;
  }
  double bad(const std::string& key, const char* what) {
    errors_.push_back("parameter '" + key + "' must be " + what);
    return kNaN;
  }

  const json& p_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

// Runs a module validator and records its message.
template <class F>
void check(std::vector<std::string>& errors, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    errors.push_back(e.what());
  }
}

std::vector<double> time_grid(double t_max, double t_step) {
  std::vector<double> t;
  if (!(t_max > 0.0) || !(t_step > 0.0)) return t;
  const auto n = static_cast<long>(std::floor(t_max / t_step + 1e-9));
  for (long k = 1; k <= n; ++k) t.push_back(static_cast<double>(k) * t_step);
  return t;
}

// --------------------------- plans -----------------------------------------

struct RamseyPlan {
  ramsey::NoiseFamily noise = ramsey::NoiseFamily::noiseless();
  std::vector<int> n;
  double T = 1.0;
  ramsey::Solver solver = ramsey::Solver::ClosedForm;
};

// Stepper and scan controls shared by both QFI experiments.
criticality::ScanOptions scan_options(Params& p) {
  criticality::ScanOptions o;
  o.h_scale = p.number("h_scale", o.h_scale);
  o.richardson = p.boolean("richardson", o.richardson);
  o.richardson_tol = p.number("richardson_tol", o.richardson_tol);
  o.truncation_audit = p.boolean("truncation_audit", o.truncation_audit);
  o.audit_tol = p.number("audit_tol", o.audit_tol);
  o.peak_prominence = p.number("peak_prominence", o.peak_prominence);
  o.sld_floor = p.number("sld_floor", o.sld_floor);
  o.stepper.rtol = p.number("rtol", o.stepper.rtol);
  o.stepper.atol = p.number("atol", o.stepper.atol);
  const auto frame = p.text("frame", "lab", {"lab", "interaction"});
  o.stepper.frame = frame == "interaction" ? lindblad::Frame::Interaction : lindblad::Frame::Lab;
  p.require(o.h_scale > 0.0 && o.h_scale < 0.1, "h_scale must lie in (0, 0.1)");
  p.require(o.richardson_tol > 0.0, "richardson_tol must be > 0");
  p.require(o.audit_tol > 0.0, "audit_tol must be > 0");
  p.require(o.peak_prominence >= 0.0, "peak_prominence must be >= 0");
  p.require(o.sld_floor > 0.0, "sld_floor must be > 0");
  p.require(o.stepper.rtol > 0.0 && o.stepper.atol > 0.0, "rtol and atol must be > 0");
  return o;
}

struct QfiPlan {
  criticality::RabiNormalPhase model;
  criticality::DissipationSpec dis;
  std::vector<double> g;
  std::vector<double> t;
  criticality::ScanOptions opts;
};

struct ThermalPlan {
  criticality::RabiNormalPhase model;
  double kappa1 = 0.0;
  std::vector<double> nbar;
  std::vector<double> t;
  criticality::ScanOptions opts;
};

struct BathPlan {
  bath::NoiseSynthSpec spec;
  double omega_q = 0.0;
  int M = 0;
  std::vector<double> t;
  bath::TrajectoryOptions traj;
  int corr_M = 0;
  std::vector<double> tau;
};

struct LadderPlan {
  double omega = 1.0;
  std::vector<double> g;
  int cutoff = 80;
  int interior = 40;
  double quartic = 0.05;
};

using Plan = std::variant<RamseyPlan, QfiPlan, ThermalPlan, BathPlan, LadderPlan>;

RamseyPlan ramsey_plan(Params& p) {
  RamseyPlan plan;
  const auto noise = p.text("noise", std::nullopt, {"zeno", "markov", "noiseless"});
  const double C = p.number("C", 1.0);
  plan.T = p.number("T", 1.0);
  plan.n = p.integers("n");
  const auto solver = p.text("solver", "closed-form", {"closed-form", "numeric"});
  plan.solver = solver == "numeric" ? ramsey::Solver::Numeric : ramsey::Solver::ClosedForm;
  check(p.errors(), [&] {
    if (noise == "zeno") plan.noise = ramsey::NoiseFamily::zeno(C);
    if (noise == "markov") plan.noise = ramsey::NoiseFamily::markov(C);
  });
  for (int n : plan.n)
    check(p.errors(), [&] { ramsey::RamseyConfig{n, plan.T, plan.noise, ramsey::Probe::GHZ, {}}.validate(); });
  return plan;
}

void check_g_list(Params& p, const std::vector<double>& g) {
  for (double x : g) p.require(x >= 0.0 && x < 1.0, "every g must lie in [0, 1)");
}

QfiPlan qfi_plan(Params& p) {
  QfiPlan plan;
  plan.model.omega = p.number("omega", 1.0);
  plan.model.cutoff = p.integer("cutoff", 80);
  plan.g = p.numbers("g");
  plan.dis.kappa1 = p.number("kappa1");
  plan.dis.nbar = p.number("nbar", 0.0);
  plan.dis.kappa2 = p.number("kappa2", 0.0);
  const double t_max = p.number("t_max");
  const double t_step = p.number("t_step", 0.05);
  plan.opts = scan_options(p);
  p.require(t_max > 0.0 && t_step > 0.0 && t_step <= t_max, "need 0 < t_step <= t_max");
  plan.t = time_grid(t_max, t_step);
  check_g_list(p, plan.g);
  check(p.errors(), [&] { plan.model.validate(); });
  check(p.errors(), [&] { plan.dis.validate(); });
  // Closed dynamics keep the full quench squeezing; with dissipation the
  // runtime truncation audit is the guard instead.
  if (plan.dis.kappa1 == 0.0 && plan.dis.kappa2 == 0.0 && plan.dis.nbar == 0.0 && !plan.g.empty() &&
      plan.model.cutoff >= 2) {
    const double g_max = *std::max_element(plan.g.begin(), plan.g.end());
    if (g_max >= 0.0 && g_max < 1.0) {
      const int need = criticality::recommended_cutoff(g_max);
      p.require(plan.model.cutoff >= need, "cutoff " + std::to_string(plan.model.cutoff) + " is too small for g = " +
                                               format_double(g_max) + " (needs >= " + std::to_string(need) + ")");
    }
  }
  return plan;
}

ThermalPlan thermal_plan(Params& p) {
  ThermalPlan plan;
  plan.model.omega = p.number("omega", 1.0);
  plan.model.g = p.number("g");
  plan.model.cutoff = p.integer("cutoff", 80);
  plan.kappa1 = p.number("kappa1");
  plan.nbar = p.numbers("nbar");
  const double t_max = p.number("t_max");
  const double t_step = p.number("t_step", 0.05);
  plan.opts = scan_options(p);
  p.require(t_max > 0.0 && t_step > 0.0 && t_step <= t_max, "need 0 < t_step <= t_max");
  plan.t = time_grid(t_max, t_step);
  p.require(plan.kappa1 > 0.0, "kappa1 must be > 0 for a thermal scan");
  for (double nb : plan.nbar) p.require(nb >= 0.0 && std::isfinite(nb), "every nbar must be finite and >= 0");
  check(p.errors(), [&] { plan.model.validate(); });
  return plan;
}

BathPlan bath_plan(Params& p) {
  BathPlan plan;
  const auto shape = p.text("shape", "flat", {"flat", "ohmic", "one-over-f"});
  const double alpha = p.number("alpha");
  const double omega0 = p.number("omega0", 1.0);
  const int Nc = p.integer("Nc");
  plan.omega_q = p.number("omega_q", 0.0);
  plan.M = p.integer("M", 2000);
  const double t_max = p.number("t_max");
  const int t_points = p.integer("t_points", 101);
  plan.traj.dt = p.number("dt", 0.0);
  const auto sampling = p.text("sampling", "step-average", {"step-average", "midpoint"});
  plan.traj.sampling = sampling == "midpoint" ? bath::Sampling::Midpoint : bath::Sampling::StepAverage;
  plan.corr_M = p.integer("corr_M", 1000);
  const double tau_max = p.number("corr_tau_max", t_max);
  const int corr_points = p.integer("corr_points", 51);

  p.require(plan.M >= 2, "M must be >= 2");
  p.require(plan.corr_M >= 2, "corr_M must be >= 2");
  p.require(t_max > 0.0, "t_max must be > 0");
  p.require(t_points >= 2, "t_points must be >= 2");
  p.require(corr_points >= 2, "corr_points must be >= 2");
  p.require(tau_max > 0.0, "corr_tau_max must be > 0");
  p.require(std::isfinite(plan.omega_q), "omega_q must be finite");
  p.require(plan.traj.dt >= 0.0, "dt must be >= 0 (0 picks the default)");
  check(p.errors(), [&] {
    const auto s = shape == "ohmic" ? bath::Shape::Ohmic
                   : shape == "one-over-f" ? bath::Shape::OneOverF
                                           : bath::Shape::Flat;
    plan.spec = bath::dephasing_spec(alpha, s, omega0, Nc);
  });
  if (plan.spec.Nc >= 1 && plan.traj.dt > bath::max_step(plan.spec) * (1.0 + 1e-12))
    p.errors().push_back("dt " + format_double(plan.traj.dt) + " exceeds the resolution limit " +
                         format_double(bath::max_step(plan.spec)));
  if (t_max > 0.0 && t_points >= 2)
    for (int k = 0; k < t_points; ++k) plan.t.push_back(t_max * k / (t_points - 1));
  if (tau_max > 0.0 && corr_points >= 2)
    for (int k = 0; k < corr_points; ++k) plan.tau.push_back(tau_max * k / (corr_points - 1));
  return plan;
}

LadderPlan ladder_plan(Params& p) {
  LadderPlan plan;
  plan.omega = p.number("omega", 1.0);
  plan.g = p.numbers("g");
  plan.cutoff = p.integer("cutoff", 80);
  plan.interior = p.integer("interior", plan.cutoff / 2);
  plan.quartic = p.number("quartic", 0.05);
  check_g_list(p, plan.g);
  p.require(plan.omega > 0.0, "omega must be > 0");
  p.require(plan.cutoff >= 4, "cutoff must be >= 4");
  p.require(plan.interior >= 2 && plan.interior < plan.cutoff, "interior must lie in [2, cutoff)");
  p.require(plan.quartic >= 0.0 && std::isfinite(plan.quartic), "quartic must be finite and >= 0");
  return plan;
}

std::optional<Plan> build_plan(const ExperimentConfig& cfg, std::vector<std::string>& errors) {
  Params p(cfg.parameters, errors);
  std::optional<Plan> plan;
  if (cfg.experiment == "ramsey-scaling") plan = ramsey_plan(p);
  else if (cfg.experiment == "criticality-qfi") plan = qfi_plan(p);
  else if (cfg.experiment == "thermal-qfi") plan = thermal_plan(p);
  else if (cfg.experiment == "bath-sim") plan = bath_plan(p);
  else if (cfg.experiment == "ladder-check") plan = ladder_plan(p);
  else {
    errors.push_back("unknown experiment '" + cfg.experiment + "' (see 'list')");
    return std::nullopt;
  }
  p.finish();
  return plan;
}

// --------------------------- execution -------------------------------------

std::vector<Table> run_plan(const RamseyPlan& plan) {
  const auto curve = ramsey::scaling_scan(plan.noise, plan.n, plan.T, plan.solver);
  Table t{"scaling.csv",
          {"n", "t_ghz", "error_ghz", "t_product", "error_product", "r", "fit_a", "fit_b", "fit_residual"},
          {}};
  for (const auto& r : curve.rows)
    t.rows.push_back({static_cast<double>(r.n), r.t_ghz, r.error_ghz, r.t_product, r.error_product, r.r,
                      curve.fit.a, curve.fit.b, curve.fit.residual});
  return {t};
}

std::vector<Table> qfi_tables(const criticality::QfiScan& scan, const std::string& key, const std::vector<double>& keys) {
  std::vector<std::string> lead;
  if (!key.empty()) lead.push_back(key);
  Table curves{"qfi.csv", lead, {}};
  for (const char* c : {"g", "Delta_g", "t", "F", "F_max_flag"}) curves.header.push_back(c);
  Table summary{"summary.csv", lead, {}};
  for (const char* c : {"g", "Delta_g", "F_max", "t_max", "period", "period_expected", "period_ratio", "peaks",
                        "max_photons"})
    summary.header.push_back(c);
  for (std::size_t i = 0; i < scan.curves.size(); ++i) {
    const auto& c = scan.curves[i];
    const double expected = 2.0 * std::numbers::pi / c.delta_g;
    for (std::size_t k = 0; k < c.t.size(); ++k) {
      std::vector<double> row;
      if (!key.empty()) row.push_back(keys[i]);
      row.insert(row.end(), {c.g, c.delta_g, c.t[k], c.F[k], c.t[k] == c.t_max ? 1.0 : 0.0});
      curves.rows.push_back(std::move(row));
    }
    std::vector<double> row;
    if (!key.empty()) row.push_back(keys[i]);
    row.insert(row.end(), {c.g, c.delta_g, c.F_max, c.t_max, c.period, expected, c.period / expected,
                           static_cast<double>(c.peak_times.size()), c.max_photons});
    summary.rows.push_back(std::move(row));
  }
  Table fit{"fit.csv",
            {"fit_a", "fit_b", "fit_residual", "richardson_g", "richardson_rel_diff", "audit_g", "audit_cutoff",
             "audit_rel_change"},
            {}};
  fit.rows.push_back({scan.fit ? scan.fit->a : kNaN, scan.fit ? scan.fit->b : kNaN,
                      scan.fit ? scan.fit->residual : kNaN, scan.richardson ? scan.richardson->g : kNaN,
                      scan.richardson ? scan.richardson->rel_diff : kNaN, scan.audit ? scan.audit->g : kNaN,
                      scan.audit ? static_cast<double>(scan.audit->doubled_cutoff) : kNaN,
                      scan.audit ? scan.audit->rel_change : kNaN});
  return {curves, summary, fit};
}

std::vector<Table> run_plan(const QfiPlan& plan) {
  const auto scan = criticality::dissipative_qfi_scan(plan.model, plan.dis, plan.g, plan.t, plan.opts);
  return qfi_tables(scan, "", {});
}

std::vector<Table> run_plan(const ThermalPlan& plan) {
  const auto scan = criticality::thermal_scan(plan.model, plan.kappa1, plan.nbar, plan.t, plan.opts);
  return qfi_tables(scan, "nbar", plan.nbar);
}

std::vector<Table> run_plan(const BathPlan& plan, std::uint64_t seed) {
  const Operator H_QS = 0.5 * plan.omega_q * sigma(Axis::Z);
  const Ket plus = Ket::normalized(Vector::Ones(2));
  const auto ens = bath::ensemble_average(H_QS, plan.spec, plus, plan.t, plan.M, seed, plan.traj);

  Table rho{"ensemble.csv",
            {"t", "rho00", "rho11", "rho01_re", "rho01_im", "stderr_rho00", "stderr_rho01_re", "stderr_rho01_im",
             "coherence", "coherence_lindblad", "coherence_exact"},
            {}};
  const double c0 = std::abs(ens.rho.front()(0, 1));
  for (std::size_t k = 0; k < ens.t.size(); ++k) {
    const auto& r = ens.rho[k];
    const double t = ens.t[k];
    rho.rows.push_back({t, r(0, 0).real(), r(1, 1).real(), r(0, 1).real(), r(0, 1).imag(), ens.stderr_re[k](0, 0),
                        ens.stderr_re[k](0, 1), ens.stderr_im[k](0, 1), std::abs(r(0, 1)) / c0,
                        std::exp(-2.0 * bath::dephasing_line(plan.spec, t)), bath::coherence_exact(plan.spec, t)});
  }

  // Separate counter stream so the correlation draws never reuse trajectory phases.
  const auto est = bath::estimate_correlation(plan.spec, plan.corr_M, plan.tau, bath::trajectory_seed(seed, ~0ull));
  Table corr{"correlation.csv", {"tau", "S_hat", "stderr", "S_analytic"}, {}};
  for (std::size_t i = 0; i < est.tau.size(); ++i)
    corr.rows.push_back({est.tau[i], est.S[i], est.stderr_[i], bath::analytic_correlation(plan.spec, est.tau[i])});

  Table psd{"psd.csv", {"omega", "weight"}, {}};
  for (const auto& l : bath::analytic_psd(plan.spec)) psd.rows.push_back({l.omega, l.weight});
  return {rho, corr, psd};
}

std::vector<Table> run_plan(const LadderPlan& plan) {
  Table t{"ladder.csv", {"g", "quartic", "Delta_measured", "Delta_expected", "residual"}, {}};
  for (double g : plan.g) {
    const criticality::RabiNormalPhase m{plan.omega, g, plan.cutoff};
    const auto frame = m.ladder();
    t.rows.push_back({g, 0.0, frame.Delta, plan.omega * m.delta_g(), criticality::check_ladder(frame, plan.interior)});
  }
  if (plan.quartic > 0.0) {
    // Anharmonic H0 breaks the equal spacing: the ladder residual must be O(1).
    const auto [a, a_dag] = ladder_ops(plan.cutoff);
    const Operator n = a_dag * a;
    const Operator X = a + a_dag;
    const double g = plan.g.front();
    const Operator H0 = plan.omega * (n + plan.quartic * n * n);
    const Operator H1 = -0.25 * plan.omega * X * X;
    const double lambda = g * g;
    const double D = criticality::spectral_spacing(H0 + lambda * H1, plan.interior, 2);
    const auto frame = criticality::build_ladder(H0, H1, lambda, D);
    t.rows.push_back({g, plan.quartic, D, kNaN, criticality::check_ladder(frame, plan.interior)});
  }
  return {t};
}

// --------------------------- filesystem ------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << bytes;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// --------------------------- config ----------------------------------------

json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment}, {"seed", seed}, {"output_dir", output_dir}, {"parameters", parameters}};
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> allowed{"experiment", "seed", "output_dir", "parameters"};
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError("unknown config key '" + k + "'");
  ExperimentConfig cfg;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw ValidationError("config needs a string 'experiment'");
  cfg.experiment = j.at("experiment").get<std::string>();
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ValidationError("'seed' must be a non-negative 64-bit integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string() || j.at("output_dir").get<std::string>().empty())
      throw ValidationError("'output_dir' must be a non-empty string");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("parameters")) {
    if (!j.at("parameters").is_object()) throw ValidationError("'parameters' must be an object");
    cfg.parameters = j.at("parameters");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

const std::vector<ExperimentInfo>& experiments() {
  static const std::vector<ExperimentInfo> list{
      {"ramsey-scaling", "GHZ vs product Ramsey error and the enhancement exponent over n", {"scaling.csv"}},
      {"criticality-qfi", "QFI F(g, t) under Lindblad loss near the normal-phase critical point",
       {"qfi.csv", "summary.csv", "fit.csv"}},
      {"thermal-qfi", "peak QFI against thermal occupation nbar at fixed g", {"qfi.csv", "summary.csv", "fit.csv"}},
      {"bath-sim", "random-phase noise ensemble emulating qubit dephasing",
       {"ensemble.csv", "correlation.csv", "psd.csv"}},
      {"ladder-check", "ladder-operator residual for H_np and an anharmonic control", {"ladder.csv"}},
  };
  return list;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  build_plan(cfg, errors);
  return errors;
}

std::vector<Table> execute(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  const auto plan = build_plan(cfg, errors);
  if (!errors.empty() || !plan) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw ValidationError(msg);
  }
  return std::visit(
      [&cfg](const auto& p) -> std::vector<Table> {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, BathPlan>) return run_plan(p, cfg.seed);
        else return run_plan(p);
      },
      *plan);
}

// --------------------------- output ----------------------------------------

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t i = 0; i < t.header.size(); ++i) s += (i ? "," : "") + t.header[i];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_double(row[i]);
    }
    s += '\n';
  }
  return s;
}

std::string checksum(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::filesystem::path& config_path, const RunOptions& opts) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    const auto errors = validate(cfg);
    if (!errors.empty()) {
      for (const auto& e : errors) std::cerr << "validation error: " << e << '\n';
      return kValidationError;
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidationError;
  }

  set_workers(opts.workers);
  std::vector<Table> tables;
  try {
    tables = execute(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidationError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternalError;
  }

  const fs::path dir(cfg.output_dir);
  std::vector<fs::path> written;
  bool created_dir = false;
  try {
    if (!fs::exists(dir)) created_dir = fs::create_directories(dir);
    json outputs = json::array();
    for (const auto& t : tables) {
      const std::string bytes = to_csv(t);
      const fs::path path = dir / t.file;
      written.push_back(path);
      write_file(path, bytes);
      outputs.push_back({{"file", t.file}, {"rows", t.rows.size()}, {"fnv1a64", checksum(bytes)}});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest{
        {"artifact", "zenosim"},
        {"version", ZENOSIM_VERSION},
        {"modules",
         {{"operator-core", ZENOSIM_VERSION},
          {"lindblad-engine", ZENOSIM_VERSION},
          {"ramsey-metrology", ZENOSIM_VERSION},
          {"criticality-sensing", ZENOSIM_VERSION},
          {"bath-engineering", ZENOSIM_VERSION},
          {"experiment-cli", ZENOSIM_VERSION}}},
        {"config", cfg.to_json()},
        {"seed", cfg.seed},
        {"seed_derivation", "trajectory k uses splitmix64(seed ^ splitmix64(k))"},
        {"workers", opts.workers},
        {"started_utc", started},
        {"wall_clock_seconds", wall},
        {"outputs", outputs},
    };
    const fs::path mpath = dir / "manifest.json";
    written.push_back(mpath);
    write_file(mpath, manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created_dir) fs::remove(dir, ec);
    std::cerr << "error: " << e.what() << '\n';
    return kInternalError;
  }
  return kSuccess;
}

}  // namespace zenosim::experiment
