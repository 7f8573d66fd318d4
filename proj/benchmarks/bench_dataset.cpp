#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "fsmscg/dataset.hpp"

namespace {

std::string synthetic_contract(std::mt19937_64& rng, int index) {
  std::ostringstream out;
  out << "pragma solidity ^0.8.0;\ncontract B" << index << " {\n";
  std::uniform_int_distribution<int> count(2, 6);
  int functions = count(rng);
  for (int f = 0; f < functions; ++f) {
    out << "    /// moves value around\n";
    out << "    function act" << index << "_" << f
        << "(uint256 a) public { value_" << index << " += a; }\n";
  }
  out << "    uint256 value_" << index << ";\n}\n";
  return out.str();
}

void BM_DedupeCorpus(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<fsmscg::CorpusItem> corpus;
  int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i)
    corpus.push_back(fsmscg::make_corpus_item(
        "f" + std::to_string(i) + ".sol", synthetic_contract(rng, i % (n / 2))));
  for (auto _ : state)
    benchmark::DoNotOptimize(fsmscg::dedupe_corpus(corpus, 0.9));
}
BENCHMARK(BM_DedupeCorpus)->Arg(32)->Arg(128)->Arg(512);

void BM_ExtractA2c(benchmark::State& state) {
  std::mt19937_64 rng(8);
  std::string source = synthetic_contract(rng, 1);
  for (int i = 0; i < state.range(0); ++i)
    source += synthetic_contract(rng, i + 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(fsmscg::extract_a2c(source));
}
BENCHMARK(BM_ExtractA2c)->Arg(4)->Arg(32);

void BM_Shingling(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::string source = synthetic_contract(rng, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(fsmscg::make_corpus_item("x.sol", source));
}
BENCHMARK(BM_Shingling);

}  // namespace
