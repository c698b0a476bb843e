#include <benchmark/benchmark.h>

#include "hypkg/ehr.hpp"
#include "hypkg/hypergraph.hpp"
#include "hypkg/model.hpp"
#include "hypkg/rng.hpp"

using namespace hypkg;

namespace {

Matrix random_set(int members, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix z(members, dim);
  for (int i = 0; i < members; ++i) {
    for (int k = 0; k < dim; ++k) z(i, k) = rng.uniform(-1, 1);
  }
  return z;
}

struct GraphFixture {
  Hypergraph hg;
  Matrix x0;
  Matrix labels;
  ModelParams params;
  std::vector<int> mask;

  static GraphFixture make(int visits, int layers) {
    GraphFixture f;
    const SyntheticData data =
        generate_synthetic({4, 12, visits, 0.1, 7});
    f.hg = build_hypergraph(data.ehr, data.links);
    f.x0 = random_node_features(f.hg.node_count(), 16, 3);
    f.labels.resize(static_cast<Eigen::Index>(data.ehr.visits.size()), 4);
    for (std::size_t i = 0; i < data.ehr.visits.size(); ++i) {
      for (int t = 0; t < 4; ++t) {
        f.labels(static_cast<Eigen::Index>(i), t) =
            data.ehr.visits[i].labels[static_cast<std::size_t>(t)];
      }
    }
    ModelConfig cfg;
    cfg.input_dim = 16;
    cfg.hidden_dim = 16;
    cfg.heads = 4;
    cfg.layers = layers;
    cfg.task_count = 4;
    cfg.final_dim = 16;
    f.params = init_params(cfg, 5);
    for (int e = 0; e < visits; ++e) f.mask.push_back(e);
    return f;
  }
};

}  // namespace

static void BM_AttentionPool(benchmark::State& state) {
  const int members = static_cast<int>(state.range(0));
  ModelConfig cfg;
  cfg.input_dim = 16;
  cfg.hidden_dim = 48;
  cfg.heads = 4;
  cfg.layers = 1;
  const ModelParams params = init_params(cfg, 1);
  const Matrix z = random_set(members, 16, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attention_pool(z, params.layers[0].node_to_edge));
  }
  state.SetItemsProcessed(state.iterations() * members);
}
BENCHMARK(BM_AttentionPool)->Arg(2)->Arg(8)->Arg(32)->Arg(128);

static void BM_Forward(benchmark::State& state) {
  const GraphFixture f =
      GraphFixture::make(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(f.hg, f.x0, f.params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

static void BM_ForwardBackward(benchmark::State& state) {
  const GraphFixture f =
      GraphFixture::make(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    const ForwardResult fwd = forward(f.hg, f.x0, f.params);
    benchmark::DoNotOptimize(
        backward(f.hg, fwd.cache, f.params, f.labels, f.mask));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_TrainEpochs(benchmark::State& state) {
  const GraphFixture f = GraphFixture::make(200, 2);
  const SyntheticData data = generate_synthetic({4, 12, 200, 0.1, 7});
  const SplitIndices split = split_dataset(data.ehr, {0.7, 0.1, 0.2}, 11);
  TrainConfig tc;
  tc.epochs = static_cast<int>(state.range(0));
  tc.eval_every = 10;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train(f.hg, f.x0, f.labels, split, f.params, tc));
  }
}
BENCHMARK(BM_TrainEpochs)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);
