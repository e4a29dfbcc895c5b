// Serial reference vs OpenMP kernels for the two embarrassingly parallel workloads.

#include "zenosim/bath.hpp"
#include "zenosim/criticality.hpp"
#include "zenosim/lindblad.hpp"

#include <benchmark/benchmark.h>

using namespace zenosim;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_Ensemble(benchmark::State& state) {
  const auto spec = bath::dephasing_spec(0.05, bath::Shape::Flat, 1.0, 20);
  const Ket plus = Ket::normalized(Vector::Ones(2));
  std::vector<double> t;
  for (int k = 0; k <= 50; ++k) t.push_back(0.1 * k);
  for (auto _ : state) {
    auto ens = bath::ensemble_average(Operator::Zero(2, 2), spec, plus, t, 512, 7, {}, mode(state));
    benchmark::DoNotOptimize(ens.rho.back()(0, 1));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_QfiScan(benchmark::State& state) {
  const criticality::RabiNormalPhase model{1.0, 0.5, 20};
  const criticality::DissipationSpec dis{1.0, 0.0, 0.0};
  std::vector<double> t;
  for (int k = 1; k <= 40; ++k) t.push_back(0.1 * k);
  criticality::ScanOptions opts;
  opts.richardson = false;
  opts.truncation_audit = false;
  opts.execution = mode(state);
  for (auto _ : state) {
    auto scan = criticality::dissipative_qfi_scan(model, dis, {0.5, 0.6, 0.7, 0.8}, t, opts);
    benchmark::DoNotOptimize(scan.curves.back().F_max);
  }
}
BENCHMARK(BM_QfiScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LindbladRhs(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const criticality::RabiNormalPhase model{1.0, 0.9, N};
  const criticality::DissipationSpec dis{1.0, 0.5, 0.0};
  lindblad::MasterEqProblem p;
  p.hamiltonian = lindblad::Hamiltonian::constant(model.hamiltonian());
  p.dissipators = dis.dissipators(N);
  p.rho0 = DensityMatrix::maximally_mixed(N + 1);
  const Operator rho = p.rho0.matrix();
  for (auto _ : state) {
    Operator d = lindblad::lindblad_rhs(p, rho, 0.0);
    benchmark::DoNotOptimize(d(0, 0));
  }
}
BENCHMARK(BM_LindbladRhs)->Arg(20)->Arg(40)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
