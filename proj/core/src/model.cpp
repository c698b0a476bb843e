#include "hypkg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hypkg/io.hpp"
#include "hypkg/rng.hpp"

namespace hypkg {

namespace {

constexpr double kProbClamp = 1e-7;

void validate_config(const ModelConfig& cfg) {
  if (cfg.input_dim < 1 || cfg.hidden_dim < 1 || cfg.heads < 1 ||
      cfg.layers < 1 || cfg.final_dim < 1 || cfg.task_count < 1) {
    throw std::invalid_argument("model config: all sizes must be positive");
  }
  if (cfg.hidden_dim % cfg.heads != 0) {
    throw std::invalid_argument("model config: heads must divide hidden_dim");
  }
}

Matrix glorot(Rng& rng, int rows, int cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

DirectionParams init_direction(Rng& rng, int input_dim, int hidden_dim,
                               int heads) {
  const int head_dim = hidden_dim / heads;
  DirectionParams dir;
  dir.heads.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    AttentionHead head;
    head.query = glorot(rng, 1, head_dim);
    head.key = glorot(rng, input_dim, head_dim);
    head.value = glorot(rng, input_dim, head_dim);
    dir.heads.push_back(std::move(head));
  }
  return dir;
}

void collect_blocks(ModelParams& params,
                    std::vector<std::pair<double*, std::size_t>>& out) {
  auto push = [&](Matrix& m) {
    out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
  };
  auto push_vec = [&](Vector& v) {
    out.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
  };
  for (LayerParams& layer : params.layers) {
    for (DirectionParams* dir : {&layer.node_to_edge, &layer.edge_to_node}) {
      for (AttentionHead& head : dir->heads) {
        push(head.query);
        push(head.key);
        push(head.value);
      }
    }
  }
  push(params.head1.weight);
  push_vec(params.head1.bias);
  push(params.head2.weight);
  push_vec(params.head2.bias);
}

}  // namespace

std::vector<std::pair<double*, std::size_t>> ModelParams::blocks() {
  std::vector<std::pair<double*, std::size_t>> out;
  collect_blocks(*this, out);
  return out;
}

std::vector<std::pair<const double*, std::size_t>> ModelParams::blocks() const {
  std::vector<std::pair<double*, std::size_t>> mutable_blocks;
  collect_blocks(const_cast<ModelParams&>(*this), mutable_blocks);
  std::vector<std::pair<const double*, std::size_t>> out;
  out.reserve(mutable_blocks.size());
  for (auto& [ptr, size] : mutable_blocks) out.emplace_back(ptr, size);
  return out;
}

std::vector<std::size_t> ModelParams::block_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& [ptr, size] : blocks()) sizes.push_back(size);
  return sizes;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  Rng rng(seed);
  ModelParams params;
  params.config = cfg;
  params.layers.reserve(static_cast<std::size_t>(cfg.layers));
  for (int l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    const int in_dim = (l == 0) ? cfg.input_dim : cfg.hidden_dim;
    layer.node_to_edge = init_direction(rng, in_dim, cfg.hidden_dim, cfg.heads);
    layer.edge_to_node =
        init_direction(rng, cfg.hidden_dim, cfg.hidden_dim, cfg.heads);
    params.layers.push_back(std::move(layer));
  }
  params.head1.weight = glorot(rng, cfg.hidden_dim, cfg.final_dim);
  params.head1.bias = Vector::Zero(cfg.final_dim);
  params.head2.weight = glorot(rng, cfg.final_dim, cfg.task_count);
  params.head2.bias = Vector::Zero(cfg.task_count);
  return params;
}

ModelParams zero_like(const ModelParams& params) {
  ModelParams out = params;
  for (auto& [ptr, size] : out.blocks()) {
    std::memset(ptr, 0, size * sizeof(double));
  }
  return out;
}

Vector attention_pool(const Matrix& set_rows, const DirectionParams& params,
                      SetPoolCache* cache, bool residual) {
  const Eigen::Index count = set_rows.rows();
  if (count == 0) {
    throw std::invalid_argument("attention_pool: empty set");
  }
  if (params.heads.empty() ||
      set_rows.cols() != params.heads[0].key.rows()) {
    throw std::invalid_argument("attention_pool: dimension mismatch");
  }
  const int head_dim = static_cast<int>(params.heads[0].query.cols());
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const int hidden = head_dim * static_cast<int>(params.heads.size());

  Vector out(hidden);
  if (cache) cache->weights.resize(params.heads.size());
  for (std::size_t h = 0; h < params.heads.size(); ++h) {
    const AttentionHead& head = params.heads[h];
    const Matrix keys = set_rows * head.key;      // |S| x head_dim
    const Matrix values = set_rows * head.value;  // |S| x head_dim

    // logits_j = query . keys_j / sqrt(head_dim), softmax over the set
    Vector logits(count);
    for (Eigen::Index j = 0; j < count; ++j) {
      logits(j) = scale * head.query.row(0).dot(keys.row(j));
    }
    const double max_logit = logits.maxCoeff();
    Vector weights(count);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < count; ++j) {
      weights(j) = std::exp(logits(j) - max_logit);
      sum += weights(j);
    }
    weights /= sum;

    double check = 0.0;
    for (Eigen::Index j = 0; j < count; ++j) {
      if (weights(j) < 0.0) {
        throw std::runtime_error("attention_pool: negative softmax weight");
      }
      check += weights(j);
    }
    if (std::abs(check - 1.0) > 1e-6) {
      throw std::runtime_error("attention_pool: softmax weights do not sum to 1");
    }

    // Fixed accumulation order (ascending member index) keeps runs bitwise
    // reproducible despite float non-associativity.
    Vector pooled = Vector::Zero(head_dim);
    for (Eigen::Index j = 0; j < count; ++j) {
      pooled += weights(j) * values.row(j).transpose();
    }
    out.segment(static_cast<Eigen::Index>(h) * head_dim, head_dim) = pooled;

    if (cache) {
      cache->weights[h].assign(weights.data(), weights.data() + count);
    }
  }

  if (residual) {
    if (set_rows.cols() != hidden) {
      throw std::invalid_argument(
          "attention_pool: residual needs matching widths");
    }
    out += set_rows.colwise().mean().transpose();
  }
  return out;
}

namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::runtime_error(std::string("forward: non-finite values in ") +
                             what);
  }
}

}  // namespace

ForwardResult forward(const Hypergraph& hg, const Matrix& x0,
                      const ModelParams& params) {
  validate_config(params.config);
  const ModelConfig& cfg = params.config;
  if (x0.rows() != static_cast<Eigen::Index>(hg.node_count()) ||
      x0.cols() != cfg.input_dim) {
    throw std::invalid_argument("forward: feature matrix shape mismatch");
  }

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.node_states.push_back(x0);
  cache.edge_pools.resize(static_cast<std::size_t>(cfg.layers));
  cache.node_pools.resize(static_cast<std::size_t>(cfg.layers));

  for (int l = 0; l < cfg.layers; ++l) {
    const Matrix& nodes = cache.node_states.back();
    const bool residual_v2e = cfg.residual && l > 0;

    Matrix edge_state(static_cast<Eigen::Index>(hg.edge_count()),
                      cfg.hidden_dim);
    cache.edge_pools[static_cast<std::size_t>(l)].resize(hg.edge_count());
    for (std::size_t e = 0; e < hg.edge_count(); ++e) {
      const Matrix members = gather_rows(nodes, hg.edges[e]);
      edge_state.row(static_cast<Eigen::Index>(e)) =
          attention_pool(members, params.layers[static_cast<std::size_t>(l)].node_to_edge,
                         &cache.edge_pools[static_cast<std::size_t>(l)][e],
                         residual_v2e)
              .transpose();
    }
    check_finite(edge_state, "edge embeddings");
    cache.edge_states.push_back(std::move(edge_state));

    Matrix node_state(static_cast<Eigen::Index>(hg.node_count()),
                      cfg.hidden_dim);
    cache.node_pools[static_cast<std::size_t>(l)].resize(hg.node_count());
    for (std::size_t v = 0; v < hg.node_count(); ++v) {
      const Matrix incident =
          gather_rows(cache.edge_states.back(), hg.node_to_edges[v]);
      node_state.row(static_cast<Eigen::Index>(v)) =
          attention_pool(incident, params.layers[static_cast<std::size_t>(l)].edge_to_node,
                         &cache.node_pools[static_cast<std::size_t>(l)][v],
                         cfg.residual)
              .transpose();
    }
    check_finite(node_state, "node embeddings");
    cache.node_states.push_back(std::move(node_state));
  }

  const Matrix& final_edges = cache.edge_states.back();
  Matrix hidden = final_edges * params.head1.weight;
  hidden.rowwise() += params.head1.bias.transpose();
  hidden = hidden.cwiseMax(0.0);  // ReLU
  cache.hidden = hidden;

  Matrix logits = hidden * params.head2.weight;
  logits.rowwise() += params.head2.bias.transpose();
  check_finite(logits, "prediction logits");

  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      probs(i, j) = 1.0 / (1.0 + std::exp(-logits(i, j)));
    }
  }
  check_finite(probs, "probabilities");
  cache.probabilities = probs;

  result.edge_embeddings = final_edges;
  result.node_embeddings = cache.node_states.back();
  result.probabilities = std::move(probs);
  return result;
}

double bce_loss(const Matrix& probabilities, const Matrix& labels,
                const std::vector<int>& edge_mask) {
  if (probabilities.rows() != labels.rows() ||
      probabilities.cols() != labels.cols()) {
    throw std::invalid_argument("bce_loss: shape mismatch");
  }
  if (edge_mask.empty()) {
    throw std::invalid_argument("bce_loss: empty edge mask");
  }
  double total = 0.0;
  for (int e : edge_mask) {
    if (e < 0 || e >= probabilities.rows()) {
      throw std::invalid_argument("bce_loss: edge index out of range");
    }
    for (Eigen::Index t = 0; t < probabilities.cols(); ++t) {
      const double p = std::clamp(probabilities(e, t), kProbClamp,
                                  1.0 - kProbClamp);
      const double y = labels(e, t);
      total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
  }
  return total / (static_cast<double>(edge_mask.size()) *
                  static_cast<double>(probabilities.cols()));
}

namespace {

// Backward through one pooled set. `set_grad` receives the members' share of
// the gradient (skipped when null, e.g. for the fixed layer-0 features).
void pool_backward(const Matrix& set_rows, const DirectionParams& params,
                   const SetPoolCache& pool, const Vector& out_grad,
                   DirectionParams& grads, Matrix* set_grad,
                   const std::vector<int>& member_rows, bool residual) {
  const Eigen::Index count = set_rows.rows();
  const int head_dim = static_cast<int>(params.heads[0].query.cols());
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  for (std::size_t h = 0; h < params.heads.size(); ++h) {
    const AttentionHead& head = params.heads[h];
    AttentionHead& grad = grads.heads[h];
    const auto& weights = pool.weights[h];
    const Vector head_grad =
        out_grad.segment(static_cast<Eigen::Index>(h) * head_dim, head_dim);

    const Matrix keys = set_rows * head.key;
    const Matrix values = set_rows * head.value;

    // d/d(values_j) = w_j * head_grad; d/d(w_j) = head_grad . values_j
    Vector weight_grad(count);
    for (Eigen::Index j = 0; j < count; ++j) {
      weight_grad(j) = head_grad.dot(values.row(j).transpose());
    }
    double dot = 0.0;
    for (Eigen::Index j = 0; j < count; ++j) dot += weights[static_cast<std::size_t>(j)] * weight_grad(j);
    // softmax backward, then the 1/sqrt(head_dim) scale
    Vector logit_grad(count);
    for (Eigen::Index j = 0; j < count; ++j) {
      logit_grad(j) =
          scale * weights[static_cast<std::size_t>(j)] * (weight_grad(j) - dot);
    }

    for (Eigen::Index j = 0; j < count; ++j) {
      const double w = weights[static_cast<std::size_t>(j)];
      const Vector member = set_rows.row(j).transpose();
      // value path
      grad.value += member * (w * head_grad).transpose();
      // query path: logits_j = scale * query . keys_j
      grad.query += logit_grad(j) * keys.row(j);
      // key path
      grad.key += member * (logit_grad(j) * head.query.row(0));
      if (set_grad) {
        set_grad->row(member_rows[static_cast<std::size_t>(j)]) +=
            (w * head_grad).transpose() * head.value.transpose() +
            logit_grad(j) * (head.query.row(0) * head.key.transpose());
      }
    }
  }

  if (residual && set_grad) {
    const double inv = 1.0 / static_cast<double>(count);
    for (int row : member_rows) {
      set_grad->row(row) += inv * out_grad.transpose();
    }
  }
}

}  // namespace

ModelParams backward(const Hypergraph& hg, const ForwardCache& cache,
                     const ModelParams& params, const Matrix& labels,
                     const std::vector<int>& edge_mask) {
  const ModelConfig& cfg = params.config;
  if (cache.node_states.size() != static_cast<std::size_t>(cfg.layers) + 1 ||
      cache.edge_states.size() != static_cast<std::size_t>(cfg.layers)) {
    throw std::invalid_argument("backward: cache does not match the model");
  }
  if (edge_mask.empty()) {
    throw std::invalid_argument("backward: empty edge mask");
  }
  const Matrix& probs = cache.probabilities;
  if (labels.rows() != probs.rows() || labels.cols() != probs.cols()) {
    throw std::invalid_argument("backward: label shape mismatch");
  }

  ModelParams grads = zero_like(params);
  const double denom = static_cast<double>(edge_mask.size()) *
                       static_cast<double>(probs.cols());

  // d(loss)/d(logits); zero outside the mask and outside the probability clamp
  Matrix logit_grad = Matrix::Zero(probs.rows(), probs.cols());
  for (int e : edge_mask) {
    for (Eigen::Index t = 0; t < probs.cols(); ++t) {
      const double p = probs(e, t);
      if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;
      logit_grad(e, t) = (p - labels(e, t)) / denom;
    }
  }

  const Matrix& final_edges = cache.edge_states.back();
  grads.head2.weight = cache.hidden.transpose() * logit_grad;
  grads.head2.bias = logit_grad.colwise().sum().transpose();
  Matrix hidden_grad = logit_grad * params.head2.weight.transpose();
  // ReLU gate
  for (Eigen::Index i = 0; i < hidden_grad.rows(); ++i) {
    for (Eigen::Index j = 0; j < hidden_grad.cols(); ++j) {
      if (cache.hidden(i, j) <= 0.0) hidden_grad(i, j) = 0.0;
    }
  }
  grads.head1.weight = final_edges.transpose() * hidden_grad;
  grads.head1.bias = hidden_grad.colwise().sum().transpose();

  Matrix edge_grad = hidden_grad * params.head1.weight.transpose();

  // Note: layer-L edge->node parameters stay at zero gradient; the node
  // embeddings they produce do not feed the prediction head.
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const std::size_t li = static_cast<std::size_t>(l);
    const Matrix& node_input = cache.node_states[li];
    const bool residual_v2e = cfg.residual && l > 0;

    Matrix node_grad = Matrix::Zero(node_input.rows(), node_input.cols());
    const bool propagate_to_nodes = l > 0;
    for (std::size_t e = 0; e < hg.edge_count(); ++e) {
      const Vector out_grad =
          edge_grad.row(static_cast<Eigen::Index>(e)).transpose();
      if (out_grad.isZero(0.0)) continue;
      const Matrix members = gather_rows(node_input, hg.edges[e]);
      pool_backward(members, params.layers[li].node_to_edge,
                    cache.edge_pools[li][e], out_grad,
                    grads.layers[li].node_to_edge,
                    (propagate_to_nodes || residual_v2e) ? &node_grad : nullptr,
                    hg.edges[e], residual_v2e);
    }
    if (l == 0) break;

    // nodes at layer l-1 come from the previous layer's edge->node pool
    const std::size_t prev = li - 1;
    const Matrix& edge_input = cache.edge_states[prev];
    Matrix next_edge_grad = Matrix::Zero(edge_input.rows(), edge_input.cols());
    for (std::size_t v = 0; v < hg.node_count(); ++v) {
      const Vector out_grad =
          node_grad.row(static_cast<Eigen::Index>(v)).transpose();
      if (out_grad.isZero(0.0)) continue;
      const Matrix incident = gather_rows(edge_input, hg.node_to_edges[v]);
      pool_backward(incident, params.layers[prev].edge_to_node,
                    cache.node_pools[prev][v], out_grad,
                    grads.layers[prev].edge_to_node, &next_edge_grad,
                    hg.node_to_edges[v], cfg.residual);
    }
    edge_grad = std::move(next_edge_grad);
  }

  return grads;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamHyper& hyper) {
  auto param_blocks = params.blocks();
  auto grad_blocks = grads.blocks();
  if (param_blocks.size() != grad_blocks.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient mismatch");
  }
  std::vector<std::pair<double*, const double*>> pairs;
  std::vector<std::size_t> sizes;
  pairs.reserve(param_blocks.size());
  for (std::size_t i = 0; i < param_blocks.size(); ++i) {
    if (param_blocks[i].second != grad_blocks[i].second) {
      throw std::invalid_argument("adam_step: block shape mismatch");
    }
    pairs.emplace_back(param_blocks[i].first, grad_blocks[i].first);
    sizes.push_back(param_blocks[i].second);
  }
  state.step(pairs, sizes, hyper);
}

Matrix gather_rows(const Matrix& source, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(rows[i]);
  }
  return out;
}

namespace {

void validate_splits(const SplitIndices& splits, Eigen::Index edge_count) {
  std::vector<char> seen(static_cast<std::size_t>(edge_count), 0);
  auto mark = [&](const std::vector<int>& fold) {
    for (int e : fold) {
      if (e < 0 || e >= edge_count) {
        throw std::invalid_argument("train: split index out of range");
      }
      if (seen[static_cast<std::size_t>(e)]++) {
        throw std::invalid_argument("train: splits are not disjoint");
      }
    }
  };
  mark(splits.train);
  mark(splits.val);
  mark(splits.test);
  if (splits.train.empty()) {
    throw std::invalid_argument("train: empty training fold");
  }
}

}  // namespace

TrainResult train(const Hypergraph& hg, const Matrix& x0, const Matrix& labels,
                  const SplitIndices& splits, const ModelParams& params_init,
                  const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.learning_rate <= 0.0 || cfg.eval_every < 1) {
    throw std::invalid_argument("train: invalid config");
  }
  validate_splits(splits, static_cast<Eigen::Index>(hg.edge_count()));

  ModelParams params = params_init;
  AdamState adam(params.block_sizes());
  AdamHyper hyper;
  hyper.lr = cfg.learning_rate;
  hyper.weight_decay = cfg.weight_decay;

  const Matrix val_labels = gather_rows(labels, splits.val);
  const Matrix test_labels = gather_rows(labels, splits.test);

  TrainResult result;
  result.best_val_auroc = -1.0;
  bool found_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ForwardResult fwd = forward(hg, x0, params);
    HistoryRow row;
    row.epoch = epoch;
    row.train_loss = bce_loss(fwd.probabilities, labels, splits.train);

    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      if (!splits.val.empty()) {
        const Matrix val_probs = gather_rows(fwd.probabilities, splits.val);
        row.val_auroc = macro_auroc(val_probs, val_labels);
      }
      if (row.val_auroc && *row.val_auroc > result.best_val_auroc) {
        result.best_val_auroc = *row.val_auroc;
        result.best_epoch = epoch;
        result.best_params = params;
        result.edge_embeddings = fwd.edge_embeddings;
        result.node_embeddings = fwd.node_embeddings;
        result.probabilities = fwd.probabilities;
        found_best = true;
      }
    }
    result.history.push_back(std::move(row));

    ModelParams grads = backward(hg, fwd.cache, params, labels, splits.train);
    adam_step(params, grads, adam, hyper);
  }

  if (!found_best) {
    // No validation signal (e.g. single-class folds): keep the final model.
    ForwardResult fwd = forward(hg, x0, params);
    result.best_params = params;
    result.best_epoch = cfg.epochs;
    result.best_val_auroc = 0.0;
    result.edge_embeddings = fwd.edge_embeddings;
    result.node_embeddings = fwd.node_embeddings;
    result.probabilities = fwd.probabilities;
  }

  if (!splits.test.empty()) {
    const Matrix test_probs = gather_rows(result.probabilities, splits.test);
    result.test_report = evaluate_multilabel(test_probs, test_labels);
  }
  return result;
}

namespace {

constexpr char kCheckpointMagic[8] = {'H', 'Y', 'P', 'K', 'G', 'C', 'K', '1'};

void write_matrix(std::ofstream& out, const Matrix& m) {
  const std::int64_t rows = m.rows();
  const std::int64_t cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::ifstream& in) {
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows < 0 || cols < 0 || rows * cols > (1ll << 32)) {
    throw std::runtime_error("checkpoint: corrupt matrix header");
  }
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw std::runtime_error("checkpoint: truncated matrix data");
  return m;
}

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  return value;
}

}  // namespace

void save_checkpoint(const ModelParams& params, std::uint64_t seed, int epoch,
                     const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint: " + path.string());
  }
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod<std::uint32_t>(out, 1);  // format version
  write_pod<std::uint64_t>(out, seed);
  write_pod<std::int32_t>(out, epoch);
  const ModelConfig& cfg = params.config;
  write_pod<std::int32_t>(out, cfg.layers);
  write_pod<std::int32_t>(out, cfg.heads);
  write_pod<std::int32_t>(out, cfg.input_dim);
  write_pod<std::int32_t>(out, cfg.hidden_dim);
  write_pod<std::int32_t>(out, cfg.final_dim);
  write_pod<std::int32_t>(out, cfg.task_count);
  write_pod<std::int32_t>(out, cfg.residual ? 1 : 0);
  for (const LayerParams& layer : params.layers) {
    for (const DirectionParams* dir :
         {&layer.node_to_edge, &layer.edge_to_node}) {
      for (const AttentionHead& head : dir->heads) {
        write_matrix(out, head.query);
        write_matrix(out, head.key);
        write_matrix(out, head.value);
      }
    }
  }
  write_matrix(out, params.head1.weight);
  write_matrix(out, Matrix(params.head1.bias.transpose()));
  write_matrix(out, params.head2.weight);
  write_matrix(out, Matrix(params.head2.bias.transpose()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path.string());
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != 1) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.seed = read_pod<std::uint64_t>(in);
  ckpt.epoch = read_pod<std::int32_t>(in);
  ModelConfig cfg;
  cfg.layers = read_pod<std::int32_t>(in);
  cfg.heads = read_pod<std::int32_t>(in);
  cfg.input_dim = read_pod<std::int32_t>(in);
  cfg.hidden_dim = read_pod<std::int32_t>(in);
  cfg.final_dim = read_pod<std::int32_t>(in);
  cfg.task_count = read_pod<std::int32_t>(in);
  cfg.residual = read_pod<std::int32_t>(in) != 0;
  validate_config(cfg);

  ckpt.params.config = cfg;
  for (int l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    for (DirectionParams* dir : {&layer.node_to_edge, &layer.edge_to_node}) {
      for (int h = 0; h < cfg.heads; ++h) {
        AttentionHead head;
        head.query = read_matrix(in);
        head.key = read_matrix(in);
        head.value = read_matrix(in);
        dir->heads.push_back(std::move(head));
      }
    }
    ckpt.params.layers.push_back(std::move(layer));
  }
  ckpt.params.head1.weight = read_matrix(in);
  ckpt.params.head1.bias = read_matrix(in).row(0).transpose();
  ckpt.params.head2.weight = read_matrix(in);
  ckpt.params.head2.bias = read_matrix(in).row(0).transpose();
  return ckpt;
}

void save_history(const std::vector<HistoryRow>& history,
                  const std::filesystem::path& path) {
  std::string out = "epoch,train_loss,val_auroc\n";
  for (const HistoryRow& row : history) {
    out += std::to_string(row.epoch);
    out += ',';
    out += format_double(row.train_loss);
    out += ',';
    if (row.val_auroc) out += format_double(*row.val_auroc);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace hypkg
