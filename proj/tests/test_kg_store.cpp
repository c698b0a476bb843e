#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hypkg/io.hpp"
#include "hypkg/kg_store.hpp"
#include "hypkg/rng.hpp"

using namespace hypkg;

namespace {

std::filesystem::path temp_file(const std::string& name,
                                const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  write_file(path, content);
  return path;
}

using NamedTriple = std::tuple<std::string, std::string, std::string>;

std::set<NamedTriple> named_triples(const KnowledgeGraph& kg) {
  std::set<NamedTriple> out;
  for (const Triple& t : kg.triples()) {
    out.insert({kg.entity_name(t.head), kg.relation_name(t.relation),
                kg.entity_name(t.tail)});
  }
  return out;
}

// Brute-force reference for the subsample contract: restrict, recount
// degrees, score, per-entity top-k, union.
std::set<NamedTriple> subsample_oracle(const std::set<NamedTriple>& triples,
                                       const std::set<std::string>& allowed,
                                       int k) {
  std::vector<NamedTriple> restricted;
  std::map<std::string, int> degree;
  for (const NamedTriple& t : triples) {
    if (!allowed.count(std::get<0>(t)) || !allowed.count(std::get<2>(t))) {
      continue;
    }
    restricted.push_back(t);
    degree[std::get<0>(t)] += 1;
    if (std::get<2>(t) != std::get<0>(t)) degree[std::get<2>(t)] += 1;
  }
  std::map<std::string, std::vector<NamedTriple>> incident;
  for (const NamedTriple& t : restricted) {
    incident[std::get<0>(t)].push_back(t);
    if (std::get<2>(t) != std::get<0>(t)) incident[std::get<2>(t)].push_back(t);
  }
  std::set<NamedTriple> kept;
  for (auto& [entity, list] : incident) {
    std::stable_sort(list.begin(), list.end(),
                     [&](const NamedTriple& a, const NamedTriple& b) {
                       const int sa = degree[std::get<0>(a)] + degree[std::get<2>(a)];
                       const int sb = degree[std::get<0>(b)] + degree[std::get<2>(b)];
                       if (sa != sb) return sa > sb;
                       return a < b;
                     });
    for (std::size_t i = 0; i < list.size() && i < static_cast<std::size_t>(k); ++i) {
      kept.insert(list[i]);
    }
  }
  return kept;
}

std::set<std::string> one_hop_closure(const std::set<NamedTriple>& triples,
                                      const std::set<std::string>& anchors) {
  std::set<std::string> allowed = anchors;
  for (const NamedTriple& t : triples) {
    if (anchors.count(std::get<0>(t)) || anchors.count(std::get<2>(t))) {
      allowed.insert(std::get<0>(t));
      allowed.insert(std::get<2>(t));
    }
  }
  return allowed;
}

}  // namespace

TEST_SUITE("kg_store") {

TEST_CASE("load_triples dedups identical lines") {
  const auto path = temp_file("kg_dup.tsv", "a\tr\tb\na\tr\tb\n");
  const KnowledgeGraph kg = load_triples(path);
  CHECK(kg.triples().size() == 1);
  CHECK(kg.entity_count() == 2);
  CHECK(kg.relation_count() == 1);
}

TEST_CASE("load_triples builds the degree index") {
  const auto path = temp_file("kg_deg.tsv", "a\tr\tb\nb\tr\tc\n");
  const KnowledgeGraph kg = load_triples(path);
  CHECK(kg.triples().size() == 2);
  CHECK(kg.degree(*kg.find_entity("a")) == 1);
  CHECK(kg.degree(*kg.find_entity("b")) == 2);
  CHECK(kg.degree(*kg.find_entity("c")) == 1);
}

TEST_CASE("load_triples rejects malformed lines with the line number") {
  const auto path = temp_file("kg_bad.tsv", "a\tr\tb\na\tr\n");
  CHECK_THROWS_WITH_AS(load_triples(path),
                       doctest::Contains(":2"), std::runtime_error);
}

TEST_CASE("load_triples rejects empty files") {
  const auto path = temp_file("kg_empty.tsv", "\n\n");
  CHECK_THROWS_AS(load_triples(path), std::runtime_error);
}

TEST_CASE("ids are assigned in first-appearance order") {
  const auto path = temp_file("kg_order.tsv", "x\tr\ty\na\tq\tx\n");
  const KnowledgeGraph kg = load_triples(path);
  CHECK(kg.entity_name(0) == "x");
  CHECK(kg.entity_name(1) == "y");
  CHECK(kg.entity_name(2) == "a");
  CHECK(kg.relation_name(0) == "r");
  CHECK(kg.relation_name(1) == "q");
}

TEST_CASE("degree counts a self-loop once") {
  KnowledgeGraph kg;
  kg.add_triple("a", "r", "a");
  kg.add_triple("a", "r", "b");
  CHECK(kg.degree(*kg.find_entity("a")) == 2);
}

TEST_CASE("subsample keeps per-entity top-k with lexicographic tie-break") {
  KnowledgeGraph kg;
  kg.add_triple("a", "r", "b");
  kg.add_triple("a", "r", "c");
  kg.add_triple("a", "r", "d");
  kg.add_triple("b", "r", "c");
  std::vector<EntityId> anchors;
  for (std::size_t i = 0; i < kg.entity_count(); ++i) {
    anchors.push_back(static_cast<EntityId>(i));
  }

  // Degrees: a=3, b=2, c=2, d=1. Scores: (a,r,b)=5, (a,r,c)=5, (a,r,d)=4,
  // (b,r,c)=4. With k=1: a keeps (a,r,b) on the tie-break, b keeps (a,r,b),
  // c keeps (a,r,c), d keeps (a,r,d).
  const KnowledgeGraph sub = subsample_kg(kg, anchors, 1);
  const std::set<NamedTriple> expected{
      {"a", "r", "b"}, {"a", "r", "c"}, {"a", "r", "d"}};
  CHECK(named_triples(sub) == expected);
}

TEST_CASE("subsample with k above every incidence keeps everything") {
  KnowledgeGraph kg;
  kg.add_triple("a", "r", "b");
  kg.add_triple("a", "r", "c");
  kg.add_triple("a", "r", "d");
  kg.add_triple("b", "r", "c");
  std::vector<EntityId> anchors;
  for (std::size_t i = 0; i < kg.entity_count(); ++i) {
    anchors.push_back(static_cast<EntityId>(i));
  }
  const KnowledgeGraph sub = subsample_kg(kg, anchors, 4);
  CHECK(named_triples(sub) == named_triples(kg));
}

TEST_CASE("subsample rejects an empty anchor set") {
  KnowledgeGraph kg;
  kg.add_triple("a", "r", "b");
  CHECK_THROWS_AS(subsample_kg(kg, {}, 1), std::invalid_argument);
}

TEST_CASE("linked-only scope drops triples that leave the anchor set") {
  KnowledgeGraph kg;
  kg.add_triple("a", "r", "b");
  kg.add_triple("b", "r", "c");
  const std::vector<EntityId> anchors{*kg.find_entity("a"),
                                      *kg.find_entity("b")};
  const KnowledgeGraph linked =
      subsample_kg(kg, anchors, 10, SubsampleScope::kLinkedOnly);
  CHECK(named_triples(linked) == std::set<NamedTriple>{{"a", "r", "b"}});

  const KnowledgeGraph hop =
      subsample_kg(kg, anchors, 10, SubsampleScope::kLinkedPlusOneHop);
  CHECK(named_triples(hop) == named_triples(kg));
}

TEST_CASE("subsample agrees with the brute-force oracle on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    KnowledgeGraph kg;
    const int n_entities = 4 + static_cast<int>(rng.uniform_index(8));
    const int n_triples = 5 + static_cast<int>(rng.uniform_index(25));
    for (int i = 0; i < n_triples; ++i) {
      const std::string h = "e" + std::to_string(rng.uniform_index(
                                      static_cast<std::size_t>(n_entities)));
      const std::string t = "e" + std::to_string(rng.uniform_index(
                                      static_cast<std::size_t>(n_entities)));
      const std::string r = "r" + std::to_string(rng.uniform_index(2));
      kg.add_triple(h, r, t);
    }
    std::set<std::string> anchor_names;
    std::vector<EntityId> anchors;
    for (std::size_t i = 0; i < kg.entity_count(); ++i) {
      if (rng.uniform() < 0.7) {
        anchors.push_back(static_cast<EntityId>(i));
        anchor_names.insert(kg.entity_name(static_cast<EntityId>(i)));
      }
    }
    if (anchors.empty()) continue;
    const int k = 1 + static_cast<int>(rng.uniform_index(3));

    const KnowledgeGraph sub = subsample_kg(kg, anchors, k);
    const std::set<std::string> allowed =
        one_hop_closure(named_triples(kg), anchor_names);
    CHECK(named_triples(sub) == subsample_oracle(named_triples(kg), allowed, k));
  }
}

TEST_CASE("subsample output is a subset and idempotent") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    KnowledgeGraph kg;
    const int n_entities = 5 + static_cast<int>(rng.uniform_index(6));
    const int n_triples = 8 + static_cast<int>(rng.uniform_index(30));
    for (int i = 0; i < n_triples; ++i) {
      kg.add_triple(
          "e" + std::to_string(rng.uniform_index(static_cast<std::size_t>(n_entities))),
          "r",
          "e" + std::to_string(rng.uniform_index(static_cast<std::size_t>(n_entities))));
    }
    std::vector<EntityId> anchors;
    for (std::size_t i = 0; i < kg.entity_count(); ++i) {
      anchors.push_back(static_cast<EntityId>(i));
    }
    const int k = 1 + static_cast<int>(rng.uniform_index(3));
    const KnowledgeGraph once = subsample_kg(kg, anchors, k);

    const std::set<NamedTriple> input = named_triples(kg);
    const std::set<NamedTriple> first = named_triples(once);
    for (const NamedTriple& t : first) CHECK(input.count(t));

    // anchors re-expressed in the subsampled graph's id space
    std::vector<EntityId> anchors_again;
    for (std::size_t i = 0; i < once.entity_count(); ++i) {
      anchors_again.push_back(static_cast<EntityId>(i));
    }
    const KnowledgeGraph twice = subsample_kg(once, anchors_again, k);
    CHECK(named_triples(twice) == first);
  }
}

TEST_CASE("degree_index matches a brute-force recount") {
  Rng rng(7);
  KnowledgeGraph kg;
  for (int i = 0; i < 500; ++i) {
    kg.add_triple("e" + std::to_string(rng.uniform_index(40)), "r",
                  "e" + std::to_string(rng.uniform_index(40)));
  }
  std::map<std::string, int> expected;
  for (const Triple& t : kg.triples()) {
    expected[kg.entity_name(t.head)] += 1;
    if (t.tail != t.head) expected[kg.entity_name(t.tail)] += 1;
  }
  for (std::size_t i = 0; i < kg.entity_count(); ++i) {
    const EntityId id = static_cast<EntityId>(i);
    CHECK(kg.degree(id) == expected[kg.entity_name(id)]);
  }
}

TEST_CASE("triple round-trip through save and load") {
  KnowledgeGraph kg;
  kg.add_triple("heart failure", "treated by", "desmopressin");
  kg.add_triple("heart failure", "related to", "renal failure");
  const auto path = std::filesystem::temp_directory_path() / "kg_rt.tsv";
  save_triples(kg, path);
  const KnowledgeGraph loaded = load_triples(path);
  CHECK(named_triples(loaded) == named_triples(kg));
}

}  // TEST_SUITE
