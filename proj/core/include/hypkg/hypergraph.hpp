#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypkg/ehr.hpp"
#include "hypkg/kg_embed.hpp"
#include "hypkg/linker.hpp"
#include "hypkg/matrix.hpp"

namespace hypkg {

// Attribute nodes and visit hyperedges with a bidirectional incidence index.
// Immutable once built.
struct Hypergraph {
  std::vector<std::string> node_attributes;        // node index -> attribute
  std::unordered_map<std::string, int> node_ids;   // attribute -> node index
  std::vector<std::vector<int>> edges;             // per visit, sorted, distinct
  std::vector<std::vector<int>> node_to_edges;     // per node, sorted

  std::size_t node_count() const { return node_attributes.size(); }
  std::size_t edge_count() const { return edges.size(); }
  int degree(int node) const {
    return static_cast<int>(node_to_edges[static_cast<std::size_t>(node)].size());
  }
};

// One node per attribute used anywhere, one hyperedge per visit holding the
// nodes of that visit's distinct attributes. Every attribute must be linked.
Hypergraph build_hypergraph(const EhrDataset& ds, const LinkTable& links);

// Builds from explicit member lists (used by the JSONL loader); empty edges
// are rejected, attributes that appear in no edge simply get no node.
Hypergraph hypergraph_from_edges(
    const std::vector<std::vector<std::string>>& edge_attributes);

// Row v holds the KG embedding of the entity linked to node v's attribute.
Matrix init_node_features(const Hypergraph& hg, const EmbeddingTable& table,
                          const LinkTable& links);

// Ablation: seeded Gaussian features of scale 1/sqrt(dim) instead of KG rows.
Matrix random_node_features(std::size_t node_count, int dim,
                            std::uint64_t seed);

// Ablation: relabels node memberships with a seeded permutation; every edge
// keeps its exact size and the incidence index is rebuilt.
Hypergraph shuffle_hyperedges(const Hypergraph& hg, std::uint64_t seed);

// JSONL, one line per edge: {"edge_id": i, "nodes": [attribute, ...]}
void save_hypergraph(const Hypergraph& hg, const std::filesystem::path& path);
Hypergraph load_hypergraph(const std::filesystem::path& path);

}  // namespace hypkg
