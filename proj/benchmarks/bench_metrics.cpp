#include <benchmark/benchmark.h>

#include "hypkg/kg_embed.hpp"
#include "hypkg/kg_store.hpp"
#include "hypkg/metrics.hpp"
#include "hypkg/rng.hpp"

using namespace hypkg;

namespace {

ScoredLabels random_scored(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ScoredLabels sl;
  for (std::size_t i = 0; i < n; ++i) {
    sl.scores.push_back(rng.uniform());
    sl.labels.push_back(rng.coin() ? 1 : 0);
  }
  sl.labels[0] = 1;
  sl.labels[n - 1] = 0;
  return sl;
}

KnowledgeGraph random_graph(int entities, int triples, std::uint64_t seed) {
  Rng rng(seed);
  KnowledgeGraph kg;
  while (kg.triples().size() < static_cast<std::size_t>(triples)) {
    kg.add_triple("e" + std::to_string(rng.uniform_index(
                            static_cast<std::size_t>(entities))),
                  "r" + std::to_string(rng.uniform_index(4)),
                  "e" + std::to_string(rng.uniform_index(
                            static_cast<std::size_t>(entities))));
  }
  return kg;
}

}  // namespace

static void BM_Auroc(benchmark::State& state) {
  const ScoredLabels sl =
      random_scored(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(sl));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_AveragePrecision(benchmark::State& state) {
  const ScoredLabels sl =
      random_scored(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_precision(sl));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_SubsampleKg(benchmark::State& state) {
  const int entities = static_cast<int>(state.range(0));
  const KnowledgeGraph kg = random_graph(entities, entities * 8, 7);
  std::vector<EntityId> anchors;
  for (std::size_t i = 0; i < kg.entity_count(); i += 2) {
    anchors.push_back(static_cast<EntityId>(i));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(subsample_kg(kg, anchors, 16));
  }
}
BENCHMARK(BM_SubsampleKg)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_ComplexScore(benchmark::State& state) {
  Rng rng(9);
  std::vector<double> h(128), r(128), t(128);
  for (int i = 0; i < 128; ++i) {
    h[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    r[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
    t[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(complex_score(h, r, t));
  }
}
BENCHMARK(BM_ComplexScore);
