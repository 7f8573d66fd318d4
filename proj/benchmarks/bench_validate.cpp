#include <benchmark/benchmark.h>

#include <random>

#include "fsmscg/validate.hpp"
#include "random_fsm.hpp"

namespace {

// validate() over machines of growing size
void BM_Validate(benchmark::State& state) {
  std::mt19937_64 rng(17);
  std::vector<fsmscg::SmartFsm> machines;
  for (int i = 0; i < 64; ++i)
    machines.push_back(testsupport::arbitrary_fsm(
        rng, static_cast<std::size_t>(state.range(0)),
        static_cast<std::size_t>(state.range(0)) * 2));

  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsmscg::validate(machines[i % machines.size()]));
    ++i;
  }
}
BENCHMARK(BM_Validate)->Arg(10)->Arg(50)->Arg(200);

void BM_GraphCheckOnly(benchmark::State& state) {
  std::mt19937_64 rng(18);
  fsmscg::SmartFsm fsm = testsupport::arbitrary_fsm(
      rng, static_cast<std::size_t>(state.range(0)),
      static_cast<std::size_t>(state.range(0)) * 4);
  fsmscg::FsmSets sets = fsmscg::extract_sets(fsm);
  for (auto _ : state)
    benchmark::DoNotOptimize(fsmscg::graph_check(fsm, sets));
}
BENCHMARK(BM_GraphCheckOnly)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace
