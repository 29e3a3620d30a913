#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "muri/dedup.hpp"

namespace {

std::string random_text(std::mt19937_64& gen, std::size_t chars) {
  static constexpr std::string_view kLetters = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<std::size_t> letter(0, kLetters.size() - 1), len(2, 9);
  std::string out;
  while (out.size() < chars) {
    for (std::size_t n = len(gen); n > 0; --n) out += kLetters[letter(gen)];
    out += ' ';
  }
  return out;
}

void BM_MinHash(benchmark::State& state) {
  std::mt19937_64 gen(1);
  const std::string text = random_text(gen, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(muri::minhash(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_MinHash)->Arg(500)->Arg(4000)->Arg(32000);

void BM_Deduplicate(benchmark::State& state) {
  std::mt19937_64 gen(2);
  std::vector<std::string> ids, texts;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    ids.push_back("doc-" + std::to_string(i));
    texts.push_back(random_text(gen, 800));
  }
  muri::DedupParams params;
  params.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(muri::deduplicate(ids, texts, params));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Deduplicate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
