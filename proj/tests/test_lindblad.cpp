#include "zenosim/error.hpp"
#include "zenosim/lindblad.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace zenosim;
using namespace zenosim::lindblad;

namespace {

double max_entry_error(const Operator& a, const Operator& b) { return (a - b).cwiseAbs().maxCoeff(); }

DensityMatrix plus_state(int n) {
  return DensityMatrix::from_ket(Ket::normalized(Vector::Ones(Index{1} << n)));
}

Operator random_density(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Operator a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
  Operator rho = a * a.adjoint();
  return rho / rho.trace();
}

}  // namespace

TEST_CASE("dephasing oracle: Markov and Zeno profiles, n = 1..3, both frames") {
  const std::vector<double> ts{0.1, 0.5, 1.0, 2.0};
  for (int n = 1; n <= 3; ++n) {
    for (const auto& profile : {RateProfile::constant(0.4), RateProfile::linear(0.6)}) {
      const DensityMatrix rho0 = n == 1 ? plus_state(1) : DensityMatrix::from_ket(ghz_state(n));
      const auto problem = dephasing_problem(n, profile, rho0, ts, 0.9);
      for (Frame frame : {Frame::Lab, Frame::Interaction}) {
        StepperOptions opts;
        opts.frame = frame;
        const auto res = integrate(problem, opts);
        REQUIRE(res.states.size() == ts.size());
        for (const auto& s : res.states) {
          const auto exact = dephasing_analytic(n, profile, rho0, s.t, 0.9);
          CHECK(max_entry_error(s.rho.matrix(), exact.matrix()) < 1e-7);
        }
      }
    }
  }
}

TEST_CASE("amplitude damping oracle") {
  const double gamma = 0.7;
  // sigma_- = |1><0| with |0> the excited state (sigma_z = +1).
  Operator lower = Operator::Zero(2, 2);
  lower(1, 0) = 1.0;
  MasterEqProblem p;
  p.hamiltonian = Hamiltonian::constant(0.5 * 1.3 * sigma(Axis::Z));
  p.dissipators.push_back({lower, RateProfile::constant(gamma)});
  p.rho0 = plus_state(1);
  p.t_grid = {0.5, 1.0, 3.0};
  const auto res = integrate(p);
  for (const auto& s : res.states) {
    CHECK(s.rho.matrix()(0, 0).real() == doctest::Approx(0.5 * std::exp(-gamma * s.t)).epsilon(1e-9));
    const Complex coh = 0.5 * std::exp(-0.5 * gamma * s.t) * std::polar(1.0, -1.3 * s.t);
    CHECK(std::abs(s.rho.matrix()(0, 1) - coh) < 1e-8);
  }
}

TEST_CASE("rate profiles and line functions") {
  const auto tab = RateProfile::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 2.0});
  CHECK(tab.rate(0.5) == doctest::Approx(1.0));
  CHECK(tab.line(2.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(tab.require_window(0.0, 3.0), DomainError);
  const auto cf = RateProfile::closed_form([](double t) { return std::sin(t); });
  CHECK(cf.line(1.0) == doctest::Approx(1.0 - std::cos(1.0)).epsilon(1e-10));
  CHECK(RateProfile::linear(2.0).line(3.0) == doctest::Approx(9.0));
  CHECK_THROWS_AS(RateProfile::tabulated({0.0, 0.0}, {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(RateProfile::constant(std::nan("")), DomainError);
}

TEST_CASE("problem validation") {
  MasterEqProblem p;
  p.hamiltonian = Hamiltonian::constant(sigma(Axis::Z));
  p.rho0 = DensityMatrix::maximally_mixed(3);
  p.t_grid = {1.0};
  CHECK_THROWS_AS(p.validate(), DimensionError);
  p.rho0 = DensityMatrix::maximally_mixed(2);
  p.t_grid = {1.0, 0.5};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.t_grid = {0.5, 1.0};
  p.dissipators.push_back({identity(3), RateProfile::constant(1.0)});
  CHECK_THROWS_AS(p.validate(), DimensionError);
}

TEST_CASE("interaction frame matches the lab frame") {
  const int N = 12;
  const auto [a, a_dag] = ladder_ops(N);
  const Operator X = a + a_dag;
  MasterEqProblem p;
  p.hamiltonian = Hamiltonian::constant(a_dag * a - 0.2 * X * X);
  p.dissipators.push_back({a, RateProfile::constant(0.3)});
  p.dissipators.push_back({a_dag, RateProfile::constant(0.1)});
  p.rho0 = DensityMatrix::from_ket(Ket::basis(N + 1, 1));
  p.t_grid = {0.5, 1.5, 4.0};
  StepperOptions lab, rot;
  rot.frame = Frame::Interaction;
  const auto r1 = integrate(p, lab);
  const auto r2 = integrate(p, rot);
  for (std::size_t k = 0; k < p.t_grid.size(); ++k)
    CHECK(max_entry_error(r1.states[k].rho.matrix(), r2.states[k].rho.matrix()) < 1e-8);
}

TEST_CASE("lockstep integration agrees with independent runs") {
  std::vector<MasterEqProblem> ps;
  for (double c : {0.2, 0.5, 1.1}) ps.push_back(dephasing_problem(2, RateProfile::linear(c), plus_state(2), {0.3, 1.0}));
  const auto joint = integrate_lockstep(ps);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto solo = integrate(ps[i]);
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(max_entry_error(joint[i].states[k].rho.matrix(), solo.states[k].rho.matrix()) < 1e-8);
  }
}

TEST_CASE("negative rates warn instead of failing") {
  // gamma < 0 re-coheres |+> beyond the Bloch sphere, so positivity breaks.
  const auto p = dephasing_problem(1, RateProfile::constant(-0.5), plus_state(1), {0.5, 2.0});
  IntegrationResult res;
  CHECK_NOTHROW(res = integrate(p));
  CHECK(!res.stats.warnings.empty());
  CHECK(res.stats.min_eigenvalue < kPositivityFloor);
}

TEST_CASE("an unstable fixed step raises PositivityViolation") {
  Operator lower = Operator::Zero(2, 2);
  lower(1, 0) = 1.0;
  MasterEqProblem p;
  p.hamiltonian = Hamiltonian::constant(Operator::Zero(2, 2));
  p.dissipators.push_back({lower, RateProfile::constant(1.0)});
  p.rho0 = DensityMatrix::from_ket(Ket::basis(2, 0));
  p.t_grid = {7.0};
  StepperOptions opts;
  opts.fixed_dt = 3.5;  // outside the RK4 stability region for rate 1
  CHECK_THROWS_AS(integrate(p, opts), PositivityViolation);
}

TEST_CASE("property: the generator is trace-free and Hermiticity-preserving") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = 2 + trial % 4;
    const Operator h = random_density(d, rng) * 3.0;
    MasterEqProblem p;
    p.hamiltonian = Hamiltonian::constant(h);
    for (int k = 0; k < 2; ++k) {
      Operator L(d, d);
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) L(i, j) = Complex(n(rng), n(rng));
      p.dissipators.push_back({L, RateProfile::constant(0.1 + 0.4 * k)});
    }
    p.rho0 = DensityMatrix::maximally_mixed(d);
    const Operator rho = random_density(d, rng);
    const Operator dr = lindblad_rhs(p, rho, 0.0);
    CHECK(std::abs(dr.trace()) < 1e-12);
    CHECK((dr - dr.adjoint()).norm() < 1e-12);
  }
}

TEST_CASE("property: integrated states stay physical") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 2 + trial % 3;
    MasterEqProblem p;
    p.hamiltonian = Hamiltonian::constant(random_density(d, rng) * 2.0);
    Operator L(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) L(i, j) = Complex(n(rng), n(rng));
    p.dissipators.push_back({L, RateProfile::constant(0.3)});
    p.rho0 = DensityMatrix::from_matrix(random_density(d, rng));
    p.t_grid = {0.5, 1.0, 2.0};
    const auto res = integrate(p);
    for (const auto& s : res.states) {
      CHECK(std::abs(s.rho.trace() - 1.0) < 1e-8);
      CHECK(is_hermitian(s.rho.matrix(), 1e-8));
      CHECK(s.rho.min_eigenvalue() > -1e-9);
    }
  }
}

TEST_CASE("Zeno short-time exponent of -ln|coherence| is 2") {
  const auto profile = RateProfile::linear(1.0);
  const std::vector<double> ts{0.01, 0.02, 0.04, 0.08};
  const auto res = integrate(dephasing_problem(1, profile, plus_state(1), ts));
  std::vector<double> y;
  for (const auto& s : res.states) y.push_back(-std::log(2.0 * std::abs(s.rho.matrix()(0, 1))));
  const double slope = std::log(y.back() / y.front()) / std::log(ts.back() / ts.front());
  CHECK(slope == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("property: halving a fixed step cuts the error at least 8x") {
  Operator lower = Operator::Zero(2, 2);
  lower(1, 0) = 1.0;
  MasterEqProblem p;
  p.hamiltonian = Hamiltonian::constant(0.5 * 1.3 * sigma(Axis::Z));
  p.dissipators.push_back({lower, RateProfile::constant(0.7)});
  p.rho0 = plus_state(1);
  p.t_grid = {2.0};
  auto error = [&](double dt) {
    StepperOptions opts;
    opts.fixed_dt = dt;
    const Operator rho = integrate(p, opts).states.back().rho.matrix();
    return std::abs(rho(0, 1) - 0.5 * std::exp(-0.35 * 2.0) * std::polar(1.0, -1.3 * 2.0));
  };
  const double e1 = error(0.2), e2 = error(0.1), e3 = error(0.05);
  CHECK(e1 / e2 >= 8.0);
  CHECK(e2 / e3 >= 8.0);
}
