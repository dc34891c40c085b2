#include <benchmark/benchmark.h>

#include <map>
#include <string>

#include "txflow/case_io.hpp"
#include "txflow/homotopy.hpp"
#include "txflow/linear_solver.hpp"
#include "txflow/nr_core.hpp"
#include "txflow/stamps.hpp"

using namespace txflow;

namespace {

const Network& network(const std::string& name) {
  static std::map<std::string, Network> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    it = cache.emplace(name, to_network(load_case(std::string(TXFLOW_CASE_DIR) + "/" + name + ".m"))).first;
  }
  return it->second;
}

void BM_Assemble(benchmark::State& st) {
  const Network& net = network("case2383wp");
  const IndexMap idx(net);
  const SolutionState s = flat_state(net, idx, 1.0, 0.0);
  for (auto _ : st) benchmark::DoNotOptimize(assemble_system(net, idx, s, HomotopyConfig::disabled()));
}

void BM_Factorize(benchmark::State& st) {
  const Network& net = network("case2383wp");
  const IndexMap idx(net);
  const SparseSystem sys = assemble_system(net, idx, flat_state(net, idx, 1.0, 0.0), HomotopyConfig::disabled());
  LinearSolver solver;
  for (auto _ : st) benchmark::DoNotOptimize(solver.factorize(sys));
}

void BM_Solve(benchmark::State& st) {
  const Network& net = network("case2383wp");
  const IndexMap idx(net);
  const SparseSystem sys = assemble_system(net, idx, flat_state(net, idx, 1.0, 0.0), HomotopyConfig::disabled());
  const Factors lu = factorize(sys);
  for (auto _ : st) benchmark::DoNotOptimize(solve(lu, sys.rhs));
}

void BM_PlainNR(benchmark::State& st, const char* name) {
  const Network& net = network(name);
  const IndexMap idx(net);
  const SolutionState init = flat_state(net, idx, 1.0, 0.0);
  for (auto _ : st) benchmark::DoNotOptimize(solve_plain(net, init, NRConfig{}));
}

void BM_TxStepping(benchmark::State& st, const char* name) {
  const Network& net = network(name);
  const IndexMap idx(net);
  const SolutionState init = trivial_start(net, idx);
  for (auto _ : st) benchmark::DoNotOptimize(solve_tx_stepping(net, init, NRConfig{}, TxOptions{}));
}

}  // namespace

BENCHMARK(BM_Assemble)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Factorize)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Solve)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_PlainNR, case300, "case300")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlainNR, case2383wp, "case2383wp")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TxStepping, case300, "case300")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TxStepping, case2383wp, "case2383wp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
