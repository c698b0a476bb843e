#include "hypkg/kg_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "hypkg/io.hpp"

namespace hypkg {

EntityId KnowledgeGraph::intern_entity(const std::string& name) {
  auto it = entity_ids_.find(name);
  if (it != entity_ids_.end()) return it->second;
  const EntityId id = static_cast<EntityId>(entity_names_.size());
  entity_names_.push_back(name);
  entity_ids_.emplace(name, id);
  degrees_.push_back(0);
  return id;
}

RelationId KnowledgeGraph::intern_relation(const std::string& name) {
  auto it = relation_ids_.find(name);
  if (it != relation_ids_.end()) return it->second;
  const RelationId id = static_cast<RelationId>(relation_names_.size());
  relation_names_.push_back(name);
  relation_ids_.emplace(name, id);
  return id;
}

bool KnowledgeGraph::add_triple(EntityId head, RelationId relation,
                                EntityId tail) {
  if (head < 0 || static_cast<std::size_t>(head) >= entity_names_.size() ||
      tail < 0 || static_cast<std::size_t>(tail) >= entity_names_.size() ||
      relation < 0 ||
      static_cast<std::size_t>(relation) >= relation_names_.size()) {
    throw std::invalid_argument("add_triple: id out of range");
  }
  const Triple t{head, relation, tail};
  if (!triple_set_.insert(t).second) return false;
  triples_.push_back(t);
  degrees_[static_cast<std::size_t>(head)] += 1;
  if (tail != head) degrees_[static_cast<std::size_t>(tail)] += 1;
  return true;
}

bool KnowledgeGraph::add_triple(const std::string& head,
                                const std::string& relation,
                                const std::string& tail) {
  const EntityId h = intern_entity(head);
  const RelationId r = intern_relation(relation);
  const EntityId t = intern_entity(tail);
  return add_triple(h, r, t);
}

const std::string& KnowledgeGraph::entity_name(EntityId id) const {
  return entity_names_.at(static_cast<std::size_t>(id));
}

const std::string& KnowledgeGraph::relation_name(RelationId id) const {
  return relation_names_.at(static_cast<std::size_t>(id));
}

std::optional<EntityId> KnowledgeGraph::find_entity(
    const std::string& name) const {
  auto it = entity_ids_.find(name);
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(
    const std::string& name) const {
  auto it = relation_ids_.find(name);
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

int KnowledgeGraph::degree(EntityId id) const {
  return degrees_.at(static_cast<std::size_t>(id));
}

KnowledgeGraph load_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open triple file: " + path.string());
  }
  KnowledgeGraph kg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 3 tab-separated fields");
    }
    kg.add_triple(fields[0], fields[1], fields[2]);
  }
  if (kg.triples().empty()) {
    throw std::runtime_error("empty knowledge graph: " + path.string());
  }
  return kg;
}

void save_triples(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::string out;
  for (const Triple& t : kg.triples()) {
    out += kg.entity_name(t.head);
    out += '\t';
    out += kg.relation_name(t.relation);
    out += '\t';
    out += kg.entity_name(t.tail);
    out += '\n';
  }
  write_file(path, out);
}

void save_entity_map(const KnowledgeGraph& kg,
                     const std::filesystem::path& path) {
  std::string out;
  for (std::size_t id = 0; id < kg.entity_count(); ++id) {
    out += kg.entity_name(static_cast<EntityId>(id));
    out += '\t';
    out += std::to_string(id);
    out += '\n';
  }
  write_file(path, out);
}

namespace {

struct ScoredTriple {
  Triple triple;
  int score;
};

}  // namespace

KnowledgeGraph subsample_kg(const KnowledgeGraph& kg,
                            const std::vector<EntityId>& anchors, int k,
                            SubsampleScope scope) {
  if (anchors.empty()) {
    throw std::invalid_argument("subsample_kg: empty anchor set");
  }
  if (k < 1) {
    throw std::invalid_argument("subsample_kg: k must be >= 1");
  }
  const std::size_t n = kg.entity_count();
  std::vector<char> allowed(n, 0);
  for (EntityId a : anchors) {
    if (a < 0 || static_cast<std::size_t>(a) >= n) {
      throw std::invalid_argument("subsample_kg: anchor id out of range");
    }
    allowed[static_cast<std::size_t>(a)] = 1;
  }
  if (scope == SubsampleScope::kLinkedPlusOneHop) {
    std::vector<char> hop(allowed);
    for (const Triple& t : kg.triples()) {
      if (allowed[static_cast<std::size_t>(t.head)] ||
          allowed[static_cast<std::size_t>(t.tail)]) {
        hop[static_cast<std::size_t>(t.head)] = 1;
        hop[static_cast<std::size_t>(t.tail)] = 1;
      }
    }
    allowed.swap(hop);
  }

  // Degrees are computed on the anchor-restricted graph before any top-k
  // filtering, then triples are scored by the sum of endpoint degrees.
  std::vector<int> restricted;
  std::vector<int> degree(n, 0);
  const std::vector<Triple>& all = kg.triples();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Triple& t = all[i];
    if (!allowed[static_cast<std::size_t>(t.head)] ||
        !allowed[static_cast<std::size_t>(t.tail)]) {
      continue;
    }
    restricted.push_back(static_cast<int>(i));
    degree[static_cast<std::size_t>(t.head)] += 1;
    if (t.tail != t.head) degree[static_cast<std::size_t>(t.tail)] += 1;
  }

  std::vector<std::vector<int>> incident(n);
  for (int idx : restricted) {
    const Triple& t = all[static_cast<std::size_t>(idx)];
    incident[static_cast<std::size_t>(t.head)].push_back(idx);
    if (t.tail != t.head) {
      incident[static_cast<std::size_t>(t.tail)].push_back(idx);
    }
  }

  auto lex_key = [&](int idx) {
    const Triple& t = all[static_cast<std::size_t>(idx)];
    return std::tie(kg.entity_name(t.head), kg.relation_name(t.relation),
                    kg.entity_name(t.tail));
  };
  auto score_of = [&](int idx) {
    const Triple& t = all[static_cast<std::size_t>(idx)];
    return degree[static_cast<std::size_t>(t.head)] +
           degree[static_cast<std::size_t>(t.tail)];
  };

  std::vector<char> kept(all.size(), 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = incident[v];
    if (list.empty()) continue;
    std::sort(list.begin(), list.end(), [&](int lhs, int rhs) {
      const int ls = score_of(lhs);
      const int rs = score_of(rhs);
      if (ls != rs) return ls > rs;
      return lex_key(lhs) < lex_key(rhs);
    });
    const std::size_t keep = std::min<std::size_t>(list.size(),
                                                   static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < keep; ++i) {
      kept[static_cast<std::size_t>(list[i])] = 1;
    }
  }

  std::vector<int> result;
  for (int idx : restricted) {
    if (kept[static_cast<std::size_t>(idx)]) result.push_back(idx);
  }
  std::sort(result.begin(), result.end(),
            [&](int lhs, int rhs) { return lex_key(lhs) < lex_key(rhs); });

  KnowledgeGraph out;
  for (int idx : result) {
    const Triple& t = all[static_cast<std::size_t>(idx)];
    out.add_triple(kg.entity_name(t.head), kg.relation_name(t.relation),
                   kg.entity_name(t.tail));
  }
  return out;
}

}  // namespace hypkg
