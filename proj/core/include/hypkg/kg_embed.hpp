#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypkg/kg_store.hpp"
#include "hypkg/matrix.hpp"

namespace hypkg {

enum class EmbeddingKind { kComplex, kTranslational, kExternal };

// Dense per-entity (and optionally per-relation) vectors of a single width.
// Complex embeddings store the real halves first, imaginary halves second.
struct EmbeddingTable {
  EmbeddingKind kind = EmbeddingKind::kExternal;
  int dim = 0;
  Matrix entity_vectors;    // row per entity
  Matrix relation_vectors;  // row per relation; may be empty
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::unordered_map<std::string, int> entity_rows;

  const double* entity_row(const std::string& name) const;  // nullptr if absent
  int require_row(const std::string& name) const;           // throws if absent
};

struct EmbedTrainConfig {
  int dim = 128;
  int epochs = 200;
  double learning_rate = 0.05;
  int negatives_per_positive = 5;
  int batch_size = 128;
  std::uint64_t seed = 7;
  EmbeddingKind model = EmbeddingKind::kComplex;
};

// Re(sum_k h_k * r_k * conj(t_k)) over real-encoded complex vectors.
double complex_score(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t);

// -||h + r - t||_2
double transe_score(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t);

double score_triple(const EmbeddingTable& table, const Triple& triple);

// Trains entity/relation embeddings on the graph with logistic loss over
// observed vs. uniformly corrupted triples, optimized with Adam.
// Deterministic for a fixed seed.
EmbeddingTable train_embeddings(const KnowledgeGraph& kg,
                                const EmbedTrainConfig& cfg);

// Mean reciprocal rank of the true tail among `candidates` entities
// (true tail plus sampled corruptions); corruptions that form a known
// triple are filtered out. Ties contribute the average rank.
double filtered_mrr(const KnowledgeGraph& known, const EmbeddingTable& table,
                    const std::vector<Triple>& heldout, int candidates,
                    std::uint64_t seed);

// Mean-centers columns, projects onto the top `dims` principal components of
// the column covariance (descending eigenvalue). Each component's sign is
// fixed so its largest-magnitude loading is positive.
Matrix pca_reduce(const Matrix& matrix, int dims);

// "N d" header, then one "entity<TAB>v1,v2,...,vd" line per entity with
// shortest round-trip decimals.
void save_embeddings(const EmbeddingTable& table,
                     const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               EmbeddingKind kind = EmbeddingKind::kExternal);

}  // namespace hypkg
