#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypkg/hypergraph.hpp"
#include "hypkg/matrix.hpp"
#include "hypkg/metrics.hpp"
#include "hypkg/optim.hpp"

namespace hypkg {

// One attention head: a learned 1 x head_dim query row plus key/value
// projections of the incoming set members.
struct AttentionHead {
  Matrix query;  // 1 x head_dim
  Matrix key;    // d_in x head_dim
  Matrix value;  // d_in x head_dim
};

struct DirectionParams {
  std::vector<AttentionHead> heads;

  int input_dim() const {
    return heads.empty() ? 0 : static_cast<int>(heads[0].key.rows());
  }
  int output_dim() const {
    return heads.empty()
               ? 0
               : static_cast<int>(heads.size() * heads[0].query.cols());
  }
};

struct LayerParams {
  DirectionParams node_to_edge;
  DirectionParams edge_to_node;
};

struct DenseLayer {
  Matrix weight;  // d_in x d_out
  Vector bias;    // d_out
};

struct ModelConfig {
  int input_dim = 128;  // width of the initial node features (d_KG)
  int hidden_dim = 48;  // d_hi; must be divisible by heads
  int heads = 4;
  int layers = 3;
  int final_dim = 48;
  int task_count = 1;
  bool residual = false;  // optional skip connection around each pool
};

struct ModelParams {
  ModelConfig config;
  std::vector<LayerParams> layers;
  DenseLayer head1;  // hidden_dim -> final_dim
  DenseLayer head2;  // final_dim -> task_count

  // Parameter blocks in a fixed traversal order (optimizer + checkpoint).
  std::vector<std::pair<double*, std::size_t>> blocks();
  std::vector<std::pair<const double*, std::size_t>> blocks() const;
  std::vector<std::size_t> block_sizes() const;
};

// Seeded Glorot-uniform weights, zero biases.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);
ModelParams zero_like(const ModelParams& params);

struct SetPoolCache {
  // Softmax weights per head over the set members, in member order.
  std::vector<std::vector<double>> weights;
};

struct ForwardCache {
  std::vector<Matrix> node_states;  // node_states[0] = X0, then layer 1..L
  std::vector<Matrix> edge_states;  // edge_states[l-1] = layer l
  std::vector<std::vector<SetPoolCache>> edge_pools;  // [layer-1][edge]
  std::vector<std::vector<SetPoolCache>> node_pools;  // [layer-1][node]
  Matrix hidden;  // |E| x final_dim, post-ReLU
  Matrix probabilities;
};

// Learned-query multi-head attention over the rows of `set_rows`; per head
// softmax(query . keys / sqrt(head_dim)) weights pooled over the value rows,
// heads concatenated. With `residual`, the column mean of the input is added
// (requires matching widths).
Vector attention_pool(const Matrix& set_rows, const DirectionParams& params,
                      SetPoolCache* cache = nullptr, bool residual = false);

struct ForwardResult {
  Matrix edge_embeddings;  // |E| x hidden_dim after layer L
  Matrix node_embeddings;  // |V| x hidden_dim after layer L
  Matrix probabilities;    // |E| x task_count
  ForwardCache cache;
};

// L rounds of node->edge then edge->node pooling, then the two dense layers
// (ReLU between, sigmoid after). Fails fast on non-finite activations.
ForwardResult forward(const Hypergraph& hg, const Matrix& x0,
                      const ModelParams& params);

// Mean binary cross-entropy over the masked edges and all tasks, with
// probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Matrix& probabilities, const Matrix& labels,
                const std::vector<int>& edge_mask);

// Exact gradients of bce_loss with respect to every parameter, reusing the
// forward cache. Returned in a ModelParams-shaped container.
ModelParams backward(const Hypergraph& hg, const ForwardCache& cache,
                     const ModelParams& params, const Matrix& labels,
                     const std::vector<int>& edge_mask);

// Classic bias-corrected Adam; weight decay joins the gradient before the
// moment updates.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamHyper& hyper);

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  int epochs = 1000;
  std::uint64_t seed = 7;
  int eval_every = 10;
};

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_auroc;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  double best_val_auroc = 0.0;
  std::vector<HistoryRow> history;
  Matrix edge_embeddings;  // at the best-validation epoch
  Matrix node_embeddings;
  Matrix probabilities;
  MetricReport test_report;
};

// Transductive training: full-graph forward each epoch, loss masked to the
// training fold, validation macro-AUROC every eval_every epochs; returns the
// parameters (and embeddings) of the best validation epoch plus the test
// metrics at that epoch. Deterministic for a fixed seed.
TrainResult train(const Hypergraph& hg, const Matrix& x0, const Matrix& labels,
                  const SplitIndices& splits, const ModelParams& params_init,
                  const TrainConfig& cfg);

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  int epoch = 0;
};

void save_checkpoint(const ModelParams& params, std::uint64_t seed, int epoch,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// CSV "epoch,train_loss,val_auroc"; the AUROC column is empty on epochs
// without a validation pass.
void save_history(const std::vector<HistoryRow>& history,
                  const std::filesystem::path& path);

Matrix gather_rows(const Matrix& source, const std::vector<int>& rows);

}  // namespace hypkg
