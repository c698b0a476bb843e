#include "hypkg/kg_embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hypkg/io.hpp"
#include "hypkg/optim.hpp"
#include "hypkg/rng.hpp"

namespace hypkg {

const double* EmbeddingTable::entity_row(const std::string& name) const {
  auto it = entity_rows.find(name);
  if (it == entity_rows.end()) return nullptr;
  return entity_vectors.row(it->second).data();
}

int EmbeddingTable::require_row(const std::string& name) const {
  auto it = entity_rows.find(name);
  if (it == entity_rows.end()) {
    throw std::runtime_error("no embedding for entity: " + name);
  }
  return it->second;
}

double complex_score(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t) {
  if (h.size() != r.size() || h.size() != t.size()) {
    throw std::invalid_argument("complex_score: dimension mismatch");
  }
  if (h.size() % 2 != 0 || h.empty()) {
    throw std::invalid_argument("complex_score: dimension must be even");
  }
  const std::size_t half = h.size() / 2;
  double acc = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    const double hr = h[k], hi = h[half + k];
    const double rr = r[k], ri = r[half + k];
    const double tr = t[k], ti = t[half + k];
    acc += (hr * rr - hi * ri) * tr + (hr * ri + hi * rr) * ti;
  }
  return acc;
}

double transe_score(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t) {
  if (h.size() != r.size() || h.size() != t.size()) {
    throw std::invalid_argument("transe_score: dimension mismatch");
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double d = h[k] + r[k] - t[k];
    sq += d * d;
  }
  return -std::sqrt(sq);
}

namespace {

std::span<const double> row_span(const Matrix& m, int row) {
  return {m.row(row).data(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

double score_triple(const EmbeddingTable& table, const Triple& triple) {
  if (table.relation_vectors.rows() == 0) {
    throw std::runtime_error("score_triple: table has no relation vectors");
  }
  const auto h = row_span(table.entity_vectors, triple.head);
  const auto r = row_span(table.relation_vectors, triple.relation);
  const auto t = row_span(table.entity_vectors, triple.tail);
  if (table.kind == EmbeddingKind::kComplex) return complex_score(h, r, t);
  if (table.kind == EmbeddingKind::kTranslational) return transe_score(h, r, t);
  throw std::runtime_error("score_triple: external table is not scoreable");
}

namespace {

// d(logistic loss)/d(score) for label y in {+1, -1}.
double loss_grad(double score, double y) {
  return -y / (1.0 + std::exp(y * score));
}

void accumulate_complex_grads(const Matrix& ent,
                              const Matrix& rel, const Triple& t,
                              double coeff, Matrix& ent_grad,
                              Matrix& rel_grad) {
  const int half = static_cast<int>(ent.cols()) / 2;
  for (int k = 0; k < half; ++k) {
    const double hr = ent(t.head, k), hi = ent(t.head, half + k);
    const double rr = rel(t.relation, k), ri = rel(t.relation, half + k);
    const double tr = ent(t.tail, k), ti = ent(t.tail, half + k);
    ent_grad(t.head, k) += coeff * (rr * tr + ri * ti);
    ent_grad(t.head, half + k) += coeff * (-ri * tr + rr * ti);
    rel_grad(t.relation, k) += coeff * (hr * tr + hi * ti);
    rel_grad(t.relation, half + k) += coeff * (-hi * tr + hr * ti);
    ent_grad(t.tail, k) += coeff * (hr * rr - hi * ri);
    ent_grad(t.tail, half + k) += coeff * (hr * ri + hi * rr);
  }
}

void accumulate_transe_grads(const Matrix& ent,
                             const Matrix& rel, const Triple& t,
                             double coeff, Matrix& ent_grad,
                             Matrix& rel_grad) {
  const int dim = static_cast<int>(ent.cols());
  double sq = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = ent(t.head, k) + rel(t.relation, k) - ent(t.tail, k);
    sq += d * d;
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) return;
  for (int k = 0; k < dim; ++k) {
    const double u = (ent(t.head, k) + rel(t.relation, k) - ent(t.tail, k)) /
                     norm;
    ent_grad(t.head, k) += coeff * -u;
    rel_grad(t.relation, k) += coeff * -u;
    ent_grad(t.tail, k) += coeff * u;
  }
}

}  // namespace

EmbeddingTable train_embeddings(const KnowledgeGraph& kg,
                                const EmbedTrainConfig& cfg) {
  if (kg.triples().empty()) {
    throw std::invalid_argument("train_embeddings: graph has no triples");
  }
  if (cfg.dim < 1 || cfg.epochs < 1 || cfg.learning_rate <= 0.0 ||
      cfg.negatives_per_positive < 1 || cfg.batch_size < 1) {
    throw std::invalid_argument("train_embeddings: invalid config");
  }
  if (cfg.model == EmbeddingKind::kComplex && cfg.dim % 2 != 0) {
    throw std::invalid_argument(
        "train_embeddings: complex embeddings need an even dimension");
  }
  if (cfg.model == EmbeddingKind::kExternal) {
    throw std::invalid_argument("train_embeddings: model must be trainable");
  }

  const int n_entities = static_cast<int>(kg.entity_count());
  const int n_relations = static_cast<int>(kg.relation_count());

  EmbeddingTable table;
  table.kind = cfg.model;
  table.dim = cfg.dim;
  table.entity_vectors.resize(n_entities, cfg.dim);
  table.relation_vectors.resize(n_relations, cfg.dim);
  table.entity_names.reserve(kg.entity_count());
  for (std::size_t i = 0; i < kg.entity_count(); ++i) {
    const std::string& name = kg.entity_name(static_cast<EntityId>(i));
    table.entity_names.push_back(name);
    table.entity_rows.emplace(name, static_cast<int>(i));
  }
  for (std::size_t i = 0; i < kg.relation_count(); ++i) {
    table.relation_names.push_back(kg.relation_name(static_cast<RelationId>(i)));
  }

  Rng rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (int i = 0; i < n_entities; ++i) {
    for (int k = 0; k < cfg.dim; ++k) {
      table.entity_vectors(i, k) = rng.uniform(-scale, scale);
    }
  }
  for (int i = 0; i < n_relations; ++i) {
    for (int k = 0; k < cfg.dim; ++k) {
      table.relation_vectors(i, k) = rng.uniform(-scale, scale);
    }
  }

  const std::size_t ent_size =
      static_cast<std::size_t>(n_entities) * static_cast<std::size_t>(cfg.dim);
  const std::size_t rel_size =
      static_cast<std::size_t>(n_relations) * static_cast<std::size_t>(cfg.dim);
  AdamState adam({ent_size, rel_size});
  AdamHyper hyper;
  hyper.lr = cfg.learning_rate;

  Matrix ent_grad = Matrix::Zero(n_entities, cfg.dim);
  Matrix rel_grad = Matrix::Zero(n_relations, cfg.dim);

  std::vector<int> order(kg.triples().size());
  std::iota(order.begin(), order.end(), 0);

  auto accumulate = [&](const Triple& t, double y, double inv_count) {
    double s;
    if (cfg.model == EmbeddingKind::kComplex) {
      s = complex_score(row_span(table.entity_vectors, t.head),
                        row_span(table.relation_vectors, t.relation),
                        row_span(table.entity_vectors, t.tail));
    } else {
      s = transe_score(row_span(table.entity_vectors, t.head),
                       row_span(table.relation_vectors, t.relation),
                       row_span(table.entity_vectors, t.tail));
    }
    const double coeff = loss_grad(s, y) * inv_count;
    if (cfg.model == EmbeddingKind::kComplex) {
      accumulate_complex_grads(table.entity_vectors, table.relation_vectors, t,
                               coeff, ent_grad, rel_grad);
    } else {
      accumulate_transe_grads(table.entity_vectors, table.relation_vectors, t,
                              coeff, ent_grad, rel_grad);
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ent_grad.setZero();
      rel_grad.setZero();
      const double inv_count =
          1.0 / (static_cast<double>(stop - start) *
                 static_cast<double>(1 + cfg.negatives_per_positive));
      for (std::size_t i = start; i < stop; ++i) {
        const Triple& pos = kg.triples()[static_cast<std::size_t>(order[i])];
        accumulate(pos, 1.0, inv_count);
        for (int neg = 0; neg < cfg.negatives_per_positive; ++neg) {
          Triple corrupted = pos;
          const EntityId replacement =
              static_cast<EntityId>(rng.uniform_index(kg.entity_count()));
          if (rng.coin()) {
            corrupted.head = replacement;
          } else {
            corrupted.tail = replacement;
          }
          accumulate(corrupted, -1.0, inv_count);
        }
      }
      adam.step({{table.entity_vectors.data(), ent_grad.data()},
                 {table.relation_vectors.data(), rel_grad.data()}},
                {ent_size, rel_size}, hyper);
    }
  }
  return table;
}

double filtered_mrr(const KnowledgeGraph& known, const EmbeddingTable& table,
                    const std::vector<Triple>& heldout, int candidates,
                    std::uint64_t seed) {
  if (candidates < 2) {
    throw std::invalid_argument("filtered_mrr: need at least 2 candidates");
  }
  Rng rng(seed);
  double total = 0.0;
  int scored = 0;
  for (const Triple& t : heldout) {
    std::vector<EntityId> tails{t.tail};
    const std::size_t want = static_cast<std::size_t>(candidates);
    std::size_t attempts = 0;
    const std::size_t max_attempts = want * 64;
    while (tails.size() < want && attempts < max_attempts) {
      ++attempts;
      const EntityId cand =
          static_cast<EntityId>(rng.uniform_index(known.entity_count()));
      if (cand == t.tail) continue;
      if (known.contains(Triple{t.head, t.relation, cand})) continue;
      if (std::find(tails.begin(), tails.end(), cand) != tails.end()) continue;
      tails.push_back(cand);
    }
    if (tails.size() < 2) continue;

    const double true_score = score_triple(table, t);
    double greater = 0.0;
    double ties = 0.0;
    for (std::size_t i = 1; i < tails.size(); ++i) {
      const double s = score_triple(table, Triple{t.head, t.relation, tails[i]});
      if (s > true_score) greater += 1.0;
      else if (s == true_score) ties += 1.0;
    }
    const double rank = 1.0 + greater + ties / 2.0;
    total += 1.0 / rank;
    ++scored;
  }
  if (scored == 0) {
    throw std::runtime_error("filtered_mrr: no scoreable held-out triples");
  }
  return total / static_cast<double>(scored);
}

Matrix pca_reduce(const Matrix& matrix, int dims) {
  const Eigen::Index n = matrix.rows();
  const Eigen::Index m = matrix.cols();
  if (n < 2) {
    throw std::invalid_argument("pca_reduce: need at least 2 rows");
  }
  if (dims < 1 || dims > std::min(n, m)) {
    throw std::invalid_argument("pca_reduce: dims out of range");
  }

  Matrix centered = matrix.rowwise() - matrix.colwise().mean();
  Eigen::MatrixXd cov =
      (centered.transpose() * centered / static_cast<double>(n - 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca_reduce: eigendecomposition failed");
  }

  // Eigen returns ascending eigenvalues; take the top `dims` in descending
  // order and fix each component's sign by its largest-magnitude loading.
  Eigen::MatrixXd components(m, dims);
  for (int c = 0; c < dims; ++c) {
    Eigen::VectorXd comp = solver.eigenvectors().col(m - 1 - c);
    Eigen::Index max_idx = 0;
    double max_abs = -1.0;
    for (Eigen::Index i = 0; i < comp.size(); ++i) {
      if (std::abs(comp(i)) > max_abs) {
        max_abs = std::abs(comp(i));
        max_idx = i;
      }
    }
    if (comp(max_idx) < 0.0) comp = -comp;
    components.col(c) = comp;
  }
  return centered * components;
}

void save_embeddings(const EmbeddingTable& table,
                     const std::filesystem::path& path) {
  std::string out = std::to_string(table.entity_vectors.rows());
  out += ' ';
  out += std::to_string(table.dim);
  out += '\n';
  for (Eigen::Index i = 0; i < table.entity_vectors.rows(); ++i) {
    out += table.entity_names[static_cast<std::size_t>(i)];
    out += '\t';
    for (Eigen::Index k = 0; k < table.entity_vectors.cols(); ++k) {
      if (k > 0) out += ',';
      out += format_double(table.entity_vectors(i, k));
    }
    out += '\n';
  }
  write_file(path, out);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               EmbeddingKind kind) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding file: " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("empty embedding file: " + path.string());
  }
  std::istringstream hs(header);
  long count = 0, dim = 0;
  if (!(hs >> count >> dim) || count < 1 || dim < 1) {
    throw std::runtime_error("bad embedding header: " + header);
  }

  EmbeddingTable table;
  table.kind = kind;
  table.dim = static_cast<int>(dim);
  table.entity_vectors.resize(count, dim);
  std::string line;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= count) {
      throw std::runtime_error("embedding file has more rows than header: " +
                               path.string());
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("embedding row missing tab: " + line);
    }
    const std::string name = line.substr(0, tab);
    const std::vector<std::string> values = split(line.substr(tab + 1), ',');
    if (static_cast<long>(values.size()) != dim) {
      throw std::runtime_error("embedding row for '" + name +
                               "' has wrong width");
    }
    for (long k = 0; k < dim; ++k) {
      const std::string& v = values[static_cast<std::size_t>(k)];
      double parsed = 0.0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), parsed);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw std::runtime_error("bad float in embedding row for '" + name +
                                 "': " + v);
      }
      table.entity_vectors(row, k) = parsed;
    }
    table.entity_names.push_back(name);
    table.entity_rows.emplace(name, static_cast<int>(row));
    ++row;
  }
  if (row != count) {
    throw std::runtime_error("embedding file row count mismatch: " +
                             path.string());
  }
  return table;
}

}  // namespace hypkg
