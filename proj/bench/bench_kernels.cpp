// Serial reference against the OpenMP path for the data-parallel kernels.
// The second argument of every benchmark selects the policy: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "mobivital/candidates.hpp"
#include "mobivital/inversion.hpp"
#include "mobivital/scoring.hpp"
#include "mobivital/simulator.hpp"

using namespace mobivital;

namespace {

Exec policy(const benchmark::State& state) { return state.range(1) == 0 ? Exec::Serial : Exec::Parallel; }

SimScenario scene(std::size_t bins) {
  SimScenario s;
  s.num_bins = bins;
  s.subject_range_m = 0.3 + 0.5 * static_cast<double>(bins) * s.bin_size_m;
  s.clutter = {{0.5, 1.0}};
  s.seed = 17;
  return s;
}

const UwbRecording& recording(std::size_t bins) {
  static std::map<std::size_t, UwbRecording> cache;
  auto it = cache.find(bins);
  if (it == cache.end()) it = cache.emplace(bins, synthesize(scene(bins)).recording).first;
  return it->second;
}

void BM_Synthesize(benchmark::State& state) {
  const auto scn = scene(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(scn, policy(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ExtractCandidates(benchmark::State& state) {
  const auto& rec = recording(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_candidates(rec, {}, policy(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}

void BM_ClassifyBank(benchmark::State& state) {
  const auto bank = extract_candidates(recording(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(classify_bank(bank, {}, policy(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bank.size()));
}

void BM_ScoreCandidates(benchmark::State& state) {
  const auto bank = extract_candidates(recording(static_cast<std::size_t>(state.range(0))));
  ArHyperParams hp;
  hp.hidden_size = 32;
  const auto model = ArModel::initialize(hp, 1);
  std::vector<std::size_t> all(bank.size());
  std::iota(all.begin(), all.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(score_candidates(model, bank, all, policy(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bank.size()));
}

}  // namespace

BENCHMARK(BM_Synthesize)->ArgsProduct({{30, 120}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractCandidates)->ArgsProduct({{30, 120}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyBank)->ArgsProduct({{30, 120}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreCandidates)->ArgsProduct({{30}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
