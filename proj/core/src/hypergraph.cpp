#include "hypkg/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hypkg/io.hpp"
#include "hypkg/rng.hpp"

namespace hypkg {

using nlohmann::json;

namespace {

void build_incidence(Hypergraph& hg) {
  hg.node_to_edges.assign(hg.node_attributes.size(), {});
  for (std::size_t e = 0; e < hg.edges.size(); ++e) {
    for (int v : hg.edges[e]) {
      hg.node_to_edges[static_cast<std::size_t>(v)].push_back(
          static_cast<int>(e));
    }
  }
  for (auto& incident : hg.node_to_edges) {
    std::sort(incident.begin(), incident.end());
  }
}

}  // namespace

Hypergraph build_hypergraph(const EhrDataset& ds, const LinkTable& links) {
  Hypergraph hg;
  for (const PatientVisit& visit : ds.visits) {
    std::set<int> members;
    for (const MedicalRecord& rec : visit.records) {
      if (links.entity_of(rec.attribute) == nullptr) {
        throw std::runtime_error("build_hypergraph: unlinked attribute: " +
                                 rec.attribute);
      }
      auto it = hg.node_ids.find(rec.attribute);
      int node;
      if (it == hg.node_ids.end()) {
        node = static_cast<int>(hg.node_attributes.size());
        hg.node_ids.emplace(rec.attribute, node);
        hg.node_attributes.push_back(rec.attribute);
      } else {
        node = it->second;
      }
      members.insert(node);
    }
    hg.edges.emplace_back(members.begin(), members.end());
  }
  build_incidence(hg);
  return hg;
}

Hypergraph hypergraph_from_edges(
    const std::vector<std::vector<std::string>>& edge_attributes) {
  Hypergraph hg;
  for (std::size_t e = 0; e < edge_attributes.size(); ++e) {
    if (edge_attributes[e].empty()) {
      throw std::runtime_error("hypergraph edge " + std::to_string(e) +
                               " is empty");
    }
    std::set<int> members;
    for (const std::string& attr : edge_attributes[e]) {
      auto it = hg.node_ids.find(attr);
      int node;
      if (it == hg.node_ids.end()) {
        node = static_cast<int>(hg.node_attributes.size());
        hg.node_ids.emplace(attr, node);
        hg.node_attributes.push_back(attr);
      } else {
        node = it->second;
      }
      members.insert(node);
    }
    hg.edges.emplace_back(members.begin(), members.end());
  }
  build_incidence(hg);
  return hg;
}

Matrix init_node_features(const Hypergraph& hg, const EmbeddingTable& table,
                          const LinkTable& links) {
  Matrix features(static_cast<Eigen::Index>(hg.node_count()), table.dim);
  for (std::size_t v = 0; v < hg.node_count(); ++v) {
    const std::string& attr = hg.node_attributes[v];
    const std::string* entity = links.entity_of(attr);
    if (entity == nullptr) {
      throw std::runtime_error("init_node_features: unlinked attribute: " +
                               attr);
    }
    const int row = table.require_row(*entity);
    features.row(static_cast<Eigen::Index>(v)) = table.entity_vectors.row(row);
  }
  return features;
}

Matrix random_node_features(std::size_t node_count, int dim,
                            std::uint64_t seed) {
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Matrix features(static_cast<Eigen::Index>(node_count), dim);
  for (Eigen::Index v = 0; v < features.rows(); ++v) {
    for (Eigen::Index k = 0; k < features.cols(); ++k) {
      features(v, k) = scale * rng.normal();
    }
  }
  return features;
}

Hypergraph shuffle_hyperedges(const Hypergraph& hg, std::uint64_t seed) {
  std::vector<int> perm(hg.node_count());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);

  Hypergraph out;
  out.node_attributes = hg.node_attributes;
  out.node_ids = hg.node_ids;
  out.edges.reserve(hg.edges.size());
  for (const auto& edge : hg.edges) {
    std::vector<int> relabeled;
    relabeled.reserve(edge.size());
    for (int v : edge) relabeled.push_back(perm[static_cast<std::size_t>(v)]);
    std::sort(relabeled.begin(), relabeled.end());
    out.edges.push_back(std::move(relabeled));
  }
  build_incidence(out);
  return out;
}

void save_hypergraph(const Hypergraph& hg, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t e = 0; e < hg.edges.size(); ++e) {
    json obj;
    obj["edge_id"] = e;
    json nodes = json::array();
    for (int v : hg.edges[e]) {
      nodes.push_back(hg.node_attributes[static_cast<std::size_t>(v)]);
    }
    obj["nodes"] = std::move(nodes);
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

Hypergraph load_hypergraph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open hypergraph file: " + path.string());
  }
  std::vector<std::vector<std::string>> edges;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const json obj = json::parse(line);
    edges.push_back(obj.at("nodes").get<std::vector<std::string>>());
  }
  if (edges.empty()) {
    throw std::runtime_error("hypergraph file has no edges: " + path.string());
  }
  return hypergraph_from_edges(edges);
}

}  // namespace hypkg
