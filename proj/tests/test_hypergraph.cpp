#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "hypkg/hypergraph.hpp"
#include "hypkg/io.hpp"
#include "hypkg/rng.hpp"

using namespace hypkg;

namespace {

LinkTable identity_links(const std::vector<std::string>& names) {
  LinkTable links;
  for (const std::string& n : names) {
    links.attributes.push_back(n);
    links.entities.push_back(n);
    links.scores.push_back(1.0);
  }
  links.rebuild_index();
  return links;
}

EhrDataset tiny_dataset(const std::vector<std::vector<std::string>>& visits) {
  EhrDataset ds;
  std::set<std::string> vocab;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    PatientVisit v;
    v.visit_id = "v" + std::to_string(i);
    for (std::size_t j = 0; j < visits[i].size(); ++j) {
      v.records.push_back({static_cast<double>(j), visits[i][j], std::nullopt});
      vocab.insert(visits[i][j]);
    }
    v.labels = {1};
    ds.visits.push_back(std::move(v));
  }
  ds.attribute_vocab.assign(vocab.begin(), vocab.end());
  ds.task_count = 1;
  return ds;
}

void check_incidence_symmetry(const Hypergraph& hg) {
  // brute-force recheck in both directions
  for (std::size_t e = 0; e < hg.edge_count(); ++e) {
    for (int v : hg.edges[e]) {
      const auto& incident = hg.node_to_edges[static_cast<std::size_t>(v)];
      CHECK(std::find(incident.begin(), incident.end(), static_cast<int>(e)) !=
            incident.end());
    }
  }
  for (std::size_t v = 0; v < hg.node_count(); ++v) {
    for (int e : hg.node_to_edges[v]) {
      const auto& members = hg.edges[static_cast<std::size_t>(e)];
      CHECK(std::find(members.begin(), members.end(), static_cast<int>(v)) !=
            members.end());
    }
  }
}

std::multiset<std::size_t> edge_sizes(const Hypergraph& hg) {
  std::multiset<std::size_t> sizes;
  for (const auto& edge : hg.edges) sizes.insert(edge.size());
  return sizes;
}

std::size_t total_incidence(const Hypergraph& hg) {
  std::size_t total = 0;
  for (const auto& edge : hg.edges) total += edge.size();
  return total;
}

}  // namespace

TEST_SUITE("hypergraph") {

TEST_CASE("two overlapping visits build the expected incidence") {
  const EhrDataset ds = tiny_dataset({{"a", "b"}, {"b", "c"}});
  const Hypergraph hg = build_hypergraph(ds, identity_links({"a", "b", "c"}));
  CHECK(hg.node_count() == 3);
  CHECK(hg.edge_count() == 2);
  CHECK(hg.degree(hg.node_ids.at("b")) == 2);
  CHECK(hg.degree(hg.node_ids.at("a")) == 1);
  CHECK(hg.degree(hg.node_ids.at("c")) == 1);
  check_incidence_symmetry(hg);
}

TEST_CASE("repeated attributes collapse to set semantics") {
  const EhrDataset ds = tiny_dataset({{"a", "a", "b"}});
  const Hypergraph hg = build_hypergraph(ds, identity_links({"a", "b"}));
  REQUIRE(hg.edge_count() == 1);
  CHECK(hg.edges[0].size() == 2);
}

TEST_CASE("unlinked attributes are reported by name") {
  const EhrDataset ds = tiny_dataset({{"a", "mystery"}});
  CHECK_THROWS_WITH_AS(build_hypergraph(ds, identity_links({"a"})),
                       doctest::Contains("mystery"), std::runtime_error);
}

TEST_CASE("incidence sum equals degree sum") {
  const SyntheticData data = generate_synthetic({4, 8, 120, 0.2, 21});
  const Hypergraph hg = build_hypergraph(data.ehr, data.links);
  std::size_t degree_sum = 0;
  for (std::size_t v = 0; v < hg.node_count(); ++v) {
    degree_sum += hg.node_to_edges[v].size();
  }
  CHECK(degree_sum == total_incidence(hg));
  check_incidence_symmetry(hg);
}

TEST_CASE("every node keeps degree >= 1 by construction") {
  const SyntheticData data = generate_synthetic({3, 6, 60, 0.1, 2});
  const Hypergraph hg = build_hypergraph(data.ehr, data.links);
  for (std::size_t v = 0; v < hg.node_count(); ++v) {
    CHECK(hg.degree(static_cast<int>(v)) >= 1);
  }
}

TEST_CASE("init_node_features copies the linked entity's vector") {
  const EhrDataset ds = tiny_dataset({{"a", "b"}});
  const LinkTable links = identity_links({"a", "b"});
  const Hypergraph hg = build_hypergraph(ds, links);

  EmbeddingTable table;
  table.kind = EmbeddingKind::kExternal;
  table.dim = 3;
  table.entity_vectors.resize(2, 3);
  table.entity_vectors << 1, 0, 0, 0, 2, 0;
  table.entity_names = {"a", "b"};
  table.entity_rows = {{"a", 0}, {"b", 1}};

  const Matrix features = init_node_features(hg, table, links);
  CHECK(features.row(hg.node_ids.at("a"))(0) == 1.0);
  CHECK(features.row(hg.node_ids.at("b"))(1) == 2.0);
  CHECK(features.row(hg.node_ids.at("a")) !=
        features.row(hg.node_ids.at("b")));
}

TEST_CASE("init_node_features rejects a missing vector") {
  const EhrDataset ds = tiny_dataset({{"a", "b"}});
  const LinkTable links = identity_links({"a", "b"});
  const Hypergraph hg = build_hypergraph(ds, links);
  EmbeddingTable table;
  table.dim = 3;
  table.entity_vectors.resize(1, 3);
  table.entity_vectors.setZero();
  table.entity_names = {"a"};
  table.entity_rows = {{"a", 0}};
  CHECK_THROWS_AS(init_node_features(hg, table, links), std::runtime_error);
}

TEST_CASE("random node features are seeded and scaled") {
  const Matrix a = random_node_features(40, 16, 5);
  const Matrix b = random_node_features(40, 16, 5);
  const Matrix c = random_node_features(40, 16, 6);
  CHECK(a == b);
  CHECK(a != c);
  // scale 1/sqrt(dim): sample std should sit near 0.25
  const double std_dev = std::sqrt(a.squaredNorm() / (40.0 * 16.0));
  CHECK(std_dev > 0.15);
  CHECK(std_dev < 0.35);
}

TEST_CASE("shuffle preserves edge sizes and total incidence") {
  const SyntheticData data = generate_synthetic({4, 8, 150, 0.2, 33});
  const Hypergraph hg = build_hypergraph(data.ehr, data.links);
  const Hypergraph shuffled = shuffle_hyperedges(hg, 77);

  CHECK(edge_sizes(shuffled) == edge_sizes(hg));
  CHECK(total_incidence(shuffled) == total_incidence(hg));
  CHECK(shuffled.node_count() == hg.node_count());
  check_incidence_symmetry(shuffled);

  const Hypergraph again = shuffle_hyperedges(hg, 77);
  CHECK(again.edges == shuffled.edges);
  CHECK(shuffle_hyperedges(hg, 78).edges != shuffled.edges);
}

TEST_CASE("hypergraph JSONL round-trip") {
  const SyntheticData data = generate_synthetic({3, 5, 40, 0.1, 13});
  const Hypergraph hg = build_hypergraph(data.ehr, data.links);
  const auto path = std::filesystem::temp_directory_path() / "hg_rt.jsonl";
  save_hypergraph(hg, path);
  const Hypergraph loaded = load_hypergraph(path);
  REQUIRE(loaded.edge_count() == hg.edge_count());
  for (std::size_t e = 0; e < hg.edge_count(); ++e) {
    std::set<std::string> expected, actual;
    for (int v : hg.edges[e]) expected.insert(hg.node_attributes[static_cast<std::size_t>(v)]);
    for (int v : loaded.edges[e]) actual.insert(loaded.node_attributes[static_cast<std::size_t>(v)]);
    CHECK(actual == expected);
  }
}

}  // TEST_SUITE
