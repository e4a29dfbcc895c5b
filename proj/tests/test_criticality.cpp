#include "zenosim/criticality.hpp"
#include "zenosim/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace zenosim;
using namespace zenosim::criticality;

namespace {

Operator random_hermitian(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Operator a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
  return 0.5 * (a + a.adjoint());
}

double variance(const Operator& a, const Ket& psi) {
  const Vector& v = psi.amplitudes();
  const Complex m = v.dot(a * v);
  return (v.dot(a * (a * v)) - m * m).real();
}

}  // namespace

TEST_CASE("normal-phase ladder is exact and its gap is omega Delta_g") {
  for (double g : {0.2, 0.5, 0.8}) {
    const RabiNormalPhase m{1.0, g, 80};
    const auto frame = m.ladder();
    CHECK(frame.Delta == doctest::Approx(m.delta_g()).epsilon(1e-12));
    CHECK(check_ladder(frame, 40) < 1e-8);
  }
  const RabiNormalPhase scaled{2.5, 0.6, 60};
  CHECK(scaled.ladder().Delta == doctest::Approx(2.5 * scaled.delta_g()).epsilon(1e-12));
}

TEST_CASE("anharmonic control breaks the ladder") {
  const auto [a, a_dag] = ladder_ops(80);
  const Operator n = a_dag * a;
  const Operator X = a + a_dag;
  const Operator H0 = n + 0.05 * n * n;
  const Operator H1 = -0.25 * X * X;
  const double D = spectral_spacing(H0 + 0.25 * H1, 40, 2);
  CHECK(check_ladder(build_ladder(H0, H1, 0.25, D), 40) > 0.1);
}

TEST_CASE("ladder construction guards") {
  Operator nh = Operator::Zero(3, 3);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(build_ladder(nh, identity(3), 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(build_ladder(identity(3), identity(4), 0.1, 1.0), DimensionError);
  CHECK_THROWS_AS((RabiNormalPhase{1.0, 1.0, 20}.validate()), DomainError);
  CHECK_THROWS_AS((RabiNormalPhase{1.0, 0.5, 1}.validate()), DomainError);
}

TEST_CASE("Rabi Hamiltonian layout and coupling derivative") {
  const Operator H = rabi_hamiltonian(1.0, 10.0, 0.3, 5);
  CHECK(H.rows() == 12);
  CHECK(is_hermitian(H));
  // Qubit first: the upper block carries +Omega/2.
  CHECK(H(0, 0).real() == doctest::Approx(5.0));
  const RabiNormalPhase m{1.3, 0.6, 30};
  const double h = 1e-6;
  const Operator fd = (RabiNormalPhase{1.3, 0.6 + h, 30}.hamiltonian() - RabiNormalPhase{1.3, 0.6 - h, 30}.hamiltonian()) / (2 * h);
  CHECK((fd - m.coupling_derivative()).norm() < 1e-6);
}

TEST_CASE("closed-form QFI: Rabi and general forms agree, and F diverges toward g = 1") {
  const int N = 60;
  const Ket vac = Ket::basis(N + 1, 0);
  const Operator P = momentum(N);
  const double g = 0.7, D = 2.0 * std::sqrt(1 - g * g), t = 1.3;
  const double rabi = qfi_closed_form(RabiForm{g, 1.0}, vac, D, t);
  const double general = qfi_closed_form(GeneralForm{2.0 * g * P * P}, vac, D, t);
  CHECK(rabi == doctest::Approx(general).epsilon(1e-12));

  double prev = 0.0;
  double first = 0.0;
  for (double gg = 0.5; gg <= 0.99 + 1e-12; gg += 0.01) {
    const double Dg = RabiNormalPhase{1.0, gg, N}.delta_g();
    const double f = qfi_closed_form(RabiForm{gg, 1.0}, vac, Dg, std::numbers::pi / Dg);
    CHECK(f > prev);
    if (first == 0.0) first = f;
    prev = f;
  }
  CHECK(prev / first >= 1e3);
  CHECK_THROWS_AS(qfi_closed_form(RabiForm{g, 1.0}, vac, 0.0, t), DomainError);
}

TEST_CASE("property: pure-state SLD QFI equals 4 Var(G)") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const Index d = 2 + trial % 6;
    const Operator G = random_hermitian(d, rng);
    Vector v(d);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Index i = 0; i < d; ++i) v(i) = Complex(n(rng), n(rng));
    const Ket psi = Ket::normalized(v);
    const UnitaryPropagator U(G);
    const StateFamily fam = [&](double th) { return DensityMatrix::from_ket(U.apply(th, psi)); };
    const double f = qfi_numeric(fam, 0.0, 1e-4);
    CHECK(f == doctest::Approx(4.0 * variance(G, psi)).epsilon(1e-6));
  }
}

TEST_CASE("property: mixing never increases the QFI") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 3 + trial % 4;
    const Operator G = random_hermitian(d, rng);
    const Ket psi = Ket::basis(d, 0);
    const double p = 0.2 + 0.03 * trial;
    const Operator rho = p * psi.amplitudes() * psi.amplitudes().adjoint() + (1 - p) * identity(d) / static_cast<double>(d);
    const Complex I(0.0, 1.0);
    const Operator drho = -I * commutator(G, rho);
    const double f = sld_qfi(rho, drho);
    CHECK(f <= 4.0 * variance(G, psi) + 1e-10);
    CHECK(f >= 0.0);
  }
}

TEST_CASE("SLD guards") {
  Operator bad(2, 2);
  bad << 1.1, 0, 0, -0.1;
  CHECK_THROWS_AS(sld_qfi(bad, Operator::Zero(2, 2)), NegativeEigenvalue);
  CHECK_THROWS_AS(sld_qfi(identity(2), identity(3)), DimensionError);
  // A step far too large for a sharply varying family trips the Richardson check.
  const StateFamily wild = [](double x) {
    return DensityMatrix::from_ket(Ket::normalized(Vector(Eigen::Vector2cd(std::cos(40 * x * x), std::sin(40 * x * x)))));
  };
  CHECK_THROWS_AS(qfi_numeric(wild, 0.3, 0.2), StepTooLarge);
}

TEST_CASE("near-null eigenvalue noise does not inflate the SLD sum") {
  Operator rho = Operator::Zero(4, 4);
  rho(0, 0) = 0.6;
  rho(1, 1) = 0.4;
  Operator drho = Operator::Zero(4, 4);
  drho(0, 1) = drho(1, 0) = 0.3;
  const double clean = sld_qfi(rho, drho, 1e-7);
  // Integration noise of a few 1e-7 in the null block, with a derivative
  // that is itself noise there.
  rho(2, 2) = 5e-7;
  rho(3, 3) = -2e-7;
  drho(2, 3) = drho(3, 2) = 1e-4;
  CHECK(sld_qfi(rho, drho, 1e-7, -1e-6) == doctest::Approx(clean).epsilon(1e-6));
}

TEST_CASE("dissipation spec") {
  CHECK_THROWS_AS((DissipationSpec{-1.0, 0.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((DissipationSpec{1.0, -0.5, 0.0}.validate()), DomainError);
  const auto ds = DissipationSpec{0.5, 2.0, 0.1}.dissipators(10);
  REQUIRE(ds.size() == 3);
  CHECK(ds[0].rate.rate(0.0) == doctest::Approx(1.5));
  CHECK(ds[1].rate.rate(0.0) == doctest::Approx(1.0));
  CHECK(ds[2].rate.rate(0.0) == doctest::Approx(0.1));
}

TEST_CASE("peak finder") {
  std::vector<double> t, y;
  for (int k = 0; k <= 400; ++k) {
    t.push_back(0.05 * k);
    y.push_back(std::sin(t.back()) + 0.1 * t.back());
  }
  const auto peaks = find_peaks(t, y, 1e-3);
  REQUIRE(peaks.size() == 3);
  // Maxima of sin t + 0.1 t sit where cos t = -0.1.
  CHECK(peaks[0] == doctest::Approx(std::acos(-0.1)).epsilon(1e-4));
  CHECK(peaks[1] - peaks[0] == doctest::Approx(2 * std::numbers::pi).epsilon(1e-4));
  CHECK(find_peaks(t, std::vector<double>(t.size(), 1.0), 1e-3).empty());
}

TEST_CASE("recommended cutoff grows toward the critical point") {
  int prev = 0;
  for (double g : {0.0, 0.5, 0.8, 0.9, 0.95, 0.99}) {
    const int n = recommended_cutoff(g);
    CHECK(n >= prev);
    prev = n;
  }
  CHECK(recommended_cutoff(0.99) > 4 * recommended_cutoff(0.95));
  CHECK_THROWS_AS(recommended_cutoff(1.0), DomainError);
}

TEST_CASE("small dissipative scan: period, Richardson and audit") {
  const RabiNormalPhase model{1.0, 0.5, 24};
  std::vector<double> t;
  for (int k = 1; k <= 500; ++k) t.push_back(0.05 * k);
  ScanOptions opts;
  opts.audit_tol = 5e-3;
  const auto scan = dissipative_qfi_scan(model, DissipationSpec{0.2, 0.0, 0.0}, {0.5, 0.6, 0.7}, t, opts);
  REQUIRE(scan.curves.size() == 3);
  REQUIRE(scan.fit.has_value());
  REQUIRE(scan.richardson.has_value());
  REQUIRE(scan.audit.has_value());
  CHECK(scan.richardson->rel_diff < 1e-3);
  CHECK(scan.audit->rel_change < 5e-3);
  for (const auto& c : scan.curves) {
    CHECK(c.F.size() == t.size());
    CHECK(c.peak_times.size() >= 2);
    CHECK(c.F_max == doctest::Approx(*std::max_element(c.F.begin(), c.F.end())));
  }
  // F_max grows as the gap closes.
  CHECK(scan.curves[2].F_max > scan.curves[0].F_max);
}

TEST_CASE("scan results do not depend on execution mode") {
  const RabiNormalPhase model{1.0, 0.5, 16};
  std::vector<double> t;
  for (int k = 1; k <= 60; ++k) t.push_back(0.1 * k);
  ScanOptions opts;
  opts.richardson = false;
  opts.truncation_audit = false;
  opts.execution = Execution::Serial;
  const auto a = dissipative_qfi_scan(model, DissipationSpec{0.5, 0.0, 0.0}, {0.4, 0.6}, t, opts);
  opts.execution = Execution::Parallel;
  const auto b = dissipative_qfi_scan(model, DissipationSpec{0.5, 0.0, 0.0}, {0.4, 0.6}, t, opts);
  for (std::size_t i = 0; i < 2; ++i) CHECK(a.curves[i].F == b.curves[i].F);
}

TEST_CASE("too small a Fock space fails the truncation audit") {
  const RabiNormalPhase model{1.0, 0.9, 3};
  std::vector<double> t;
  for (int k = 1; k <= 100; ++k) t.push_back(0.1 * k);
  ScanOptions opts;
  opts.richardson = false;
  CHECK_THROWS_AS(dissipative_qfi_scan(model, DissipationSpec{0.1, 0.0, 0.0}, {0.85, 0.9}, t, opts),
                  TruncationAuditFailure);
}
