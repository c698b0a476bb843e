#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace hypkg {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = static_cast<std::uint32_t>(t.head);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint32_t>(t.relation);
    h = h * 0x9e3779b97f4a7c15ull + static_cast<std::uint32_t>(t.tail);
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

// Multi-relational graph: interned entity/relation names plus a deduplicated
// triple list. Read-only once built; construction is single-threaded.
class KnowledgeGraph {
 public:
  EntityId intern_entity(const std::string& name);
  RelationId intern_relation(const std::string& name);

  // Returns false when the triple is already present.
  bool add_triple(EntityId head, RelationId relation, EntityId tail);
  bool add_triple(const std::string& head, const std::string& relation,
                  const std::string& tail);

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }
  bool contains(const Triple& t) const { return triple_set_.count(t) > 0; }

  const std::string& entity_name(EntityId id) const;
  const std::string& relation_name(RelationId id) const;
  std::optional<EntityId> find_entity(const std::string& name) const;
  std::optional<RelationId> find_relation(const std::string& name) const;
  const std::vector<std::string>& entity_names() const { return entity_names_; }

  // Number of triples a given entity participates in; a self-loop counts once.
  int degree(EntityId id) const;
  const std::vector<int>& degree_index() const { return degrees_; }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::vector<Triple> triples_;
  std::unordered_set<Triple, TripleHash> triple_set_;
  std::vector<int> degrees_;
};

// Parses a UTF-8 TSV file, one "head<TAB>relation<TAB>tail" triple per line.
// Duplicate lines collapse; ids follow first appearance. Throws on malformed
// lines (with the line number) and on files with no triples at all.
KnowledgeGraph load_triples(const std::filesystem::path& path);

void save_triples(const KnowledgeGraph& kg, const std::filesystem::path& path);

// Two-column TSV "entity<TAB>id", one row per entity in id order.
void save_entity_map(const KnowledgeGraph& kg,
                     const std::filesystem::path& path);

enum class SubsampleScope {
  kLinkedOnly,        // keep triples with both endpoints in the anchor set
  kLinkedPlusOneHop,  // also allow one-hop neighbors of anchors (default)
};

// Restricts the graph around the anchors, scores each surviving triple by
// degree(head) + degree(tail) within the restricted graph, keeps each
// entity's top-k incident triples (ties broken by lexicographic
// (head, relation, tail)), and returns the union. Deterministic.
KnowledgeGraph subsample_kg(
    const KnowledgeGraph& kg, const std::vector<EntityId>& anchors, int k,
    SubsampleScope scope = SubsampleScope::kLinkedPlusOneHop);

}  // namespace hypkg
