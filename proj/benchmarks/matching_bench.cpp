#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ata/alignment.hpp"
#include "ata/matching.hpp"
#include "ata/synthdata.hpp"

namespace {

ata::SimilarityMatrix cosine_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const std::size_t c = 16;
  std::vector<double> a(n * c), b(n * c);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  return ata::cosine_similarity_matrix(ata::MatrixView(a, n, c), ata::MatrixView(b, n, c));
}

void BM_ExactSolver(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = cosine_matrix(n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(ata::solve_assignment_exact(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactSolver)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_GreedySolver(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = cosine_matrix(n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(ata::solve_assignment_greedy(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GreedySolver)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_AlignClip(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto clip = ata::gen_shuffled(ata::gen_shifted(8, side, side, 16, 1, 0, 3), 4);
  for (auto _ : state) benchmark::DoNotOptimize(ata::align_clip(clip.volume));
}
BENCHMARK(BM_AlignClip)->DenseRange(4, 14, 2);

}  // namespace
