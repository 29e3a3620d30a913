#include <benchmark/benchmark.h>

#include <string>

#include "muri/filters.hpp"

namespace {

void BM_KeywordFilter(benchmark::State& state) {
  std::string instruction;
  while (instruction.size() < 400) instruction += "Describe the history of the old harbour town. ";
  const muri::FilterConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(muri::keyword_filter(instruction, cfg));
}
BENCHMARK(BM_KeywordFilter);

void BM_StructuralNoise(benchmark::State& state) {
  std::string doc;
  for (int i = 0; i < 50; ++i) doc += "Home | About | https://example.org/page" + std::to_string(i) + "\n";
  for (auto _ : state) benchmark::DoNotOptimize(muri::structural_noise_score(doc));
}
BENCHMARK(BM_StructuralNoise);

}  // namespace
