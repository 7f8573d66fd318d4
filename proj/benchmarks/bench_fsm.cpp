#include <benchmark/benchmark.h>

#include <random>

#include "fsmscg/fsm.hpp"
#include "random_fsm.hpp"

namespace {

void BM_Serialize(benchmark::State& state) {
  std::mt19937_64 rng(3);
  fsmscg::SmartFsm fsm = testsupport::arbitrary_fsm(
      rng, static_cast<std::size_t>(state.range(0)),
      static_cast<std::size_t>(state.range(0)) * 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(fsmscg::serialize_fsm(fsm));
}
BENCHMARK(BM_Serialize)->Arg(10)->Arg(100);

void BM_ParseSerializeRoundTrip(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::string bytes = fsmscg::serialize_fsm(testsupport::arbitrary_fsm(
      rng, static_cast<std::size_t>(state.range(0)),
      static_cast<std::size_t>(state.range(0)) * 2));
  for (auto _ : state)
    benchmark::DoNotOptimize(fsmscg::serialize_fsm(fsmscg::parse_fsm(bytes)));
}
BENCHMARK(BM_ParseSerializeRoundTrip)->Arg(10)->Arg(100);

}  // namespace
