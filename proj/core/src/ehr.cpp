#include "hypkg/ehr.hpp"

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

EhrDataset load_ehr(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open EHR file: " + path.string());
  }
  EhrDataset ds;
  std::set<std::string> vocab;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }

    PatientVisit visit;
    visit.visit_id = obj.at("visit_id").is_string()
                         ? obj.at("visit_id").get<std::string>()
                         : obj.at("visit_id").dump();
    if (!seen_ids.insert(visit.visit_id).second) {
      throw std::runtime_error("duplicate visit_id: " + visit.visit_id);
    }

    const json& records = obj.at("records");
    if (!records.is_array() || records.empty()) {
      throw std::runtime_error("visit " + visit.visit_id +
                               " has no records");
    }
    for (const json& rec : records) {
      MedicalRecord r;
      r.t = rec.at("t").get<double>();
      r.attribute = rec.at("a").get<std::string>();
      if (rec.contains("lt") && !rec.at("lt").is_null()) {
        r.literal = rec.at("lt").get<std::string>();
      }
      if (r.t < 0.0) {
        throw std::runtime_error("visit " + visit.visit_id +
                                 " has a negative timestamp");
      }
      if (r.attribute.empty()) {
        throw std::runtime_error("visit " + visit.visit_id +
                                 " has an empty attribute");
      }
      visit.records.push_back(std::move(r));
    }
    std::stable_sort(visit.records.begin(), visit.records.end(),
                     [](const MedicalRecord& a, const MedicalRecord& b) {
                       return a.t < b.t;
                     });

    const json& labels = obj.at("labels");
    if (!labels.is_array()) {
      throw std::runtime_error("visit " + visit.visit_id +
                               " labels must be an array");
    }
    for (const json& v : labels) {
      const int value = v.get<int>();
      if (value != 0 && value != 1) {
        throw std::runtime_error("visit " + visit.visit_id +
                                 " has a non-binary label");
      }
      visit.labels.push_back(value);
    }
    if (ds.visits.empty()) {
      ds.task_count = static_cast<int>(visit.labels.size());
    } else if (static_cast<int>(visit.labels.size()) != ds.task_count) {
      throw std::runtime_error("visit " + visit.visit_id +
                               " has inconsistent label length");
    }

    for (const MedicalRecord& r : visit.records) vocab.insert(r.attribute);
    ds.visits.push_back(std::move(visit));
  }
  if (ds.visits.empty()) {
    throw std::runtime_error("EHR file has no visits: " + path.string());
  }
  ds.attribute_vocab.assign(vocab.begin(), vocab.end());
  return ds;
}

void save_ehr(const EhrDataset& ds, const std::filesystem::path& path) {
  std::string out;
  for (const PatientVisit& visit : ds.visits) {
    json obj;
    obj["visit_id"] = visit.visit_id;
    json records = json::array();
    for (const MedicalRecord& r : visit.records) {
      json rec;
      rec["t"] = r.t;
      rec["a"] = r.attribute;
      if (r.literal) rec["lt"] = *r.literal;
      records.push_back(std::move(rec));
    }
    obj["records"] = std::move(records);
    obj["labels"] = visit.labels;
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

SplitIndices split_dataset(const EhrDataset& ds,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  const std::size_t n = ds.visits.size();
  if (n < 3) {
    throw std::invalid_argument("split_dataset: need at least 3 visits");
  }
  for (double r : ratios) {
    if (r <= 0.0) {
      throw std::invalid_argument("split_dataset: ratios must be positive");
    }
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[1]));
  const std::size_t n_test =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[2]));
  const std::size_t n_train = n - n_val - n_test;

  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                    order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void save_split(const EhrDataset& ds, const SplitIndices& split,
                const std::filesystem::path& path) {
  std::string out;
  auto emit = [&](const std::vector<int>& fold, const char* name) {
    for (int idx : fold) {
      out += csv_field(ds.visits[static_cast<std::size_t>(idx)].visit_id);
      out += ',';
      out += name;
      out += '\n';
    }
  };
  emit(split.train, "train");
  emit(split.val, "val");
  emit(split.test, "test");
  write_file(path, out);
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_clusters < 1 || cfg.n_visits < 1) {
    throw std::invalid_argument("generate_synthetic: counts must be positive");
  }
  if (cfg.attrs_per_cluster < 2) {
    throw std::invalid_argument(
        "generate_synthetic: need at least 2 attributes per cluster");
  }
  if (cfg.noise_rate < 0.0 || cfg.noise_rate >= 1.0) {
    throw std::invalid_argument("generate_synthetic: noise_rate in [0,1)");
  }

  SyntheticData data;
  std::vector<std::vector<std::string>> cluster_attrs(
      static_cast<std::size_t>(cfg.n_clusters));
  for (int c = 0; c < cfg.n_clusters; ++c) {
    for (int j = 0; j < cfg.attrs_per_cluster; ++j) {
      cluster_attrs[static_cast<std::size_t>(c)].push_back(
          "cluster" + std::to_string(c) + " attr" + std::to_string(j));
    }
  }

  // Intra-cluster cliques give the KG embedding something to learn.
  for (int c = 0; c < cfg.n_clusters; ++c) {
    const auto& attrs = cluster_attrs[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      for (std::size_t j = i + 1; j < attrs.size(); ++j) {
        data.kg.add_triple(attrs[i], "related to", attrs[j]);
      }
    }
  }

  Rng rng(cfg.seed);
  const int max_visit_size = std::min(8, cfg.attrs_per_cluster);
  const int min_visit_size = std::min(3, max_visit_size);
  for (int v = 0; v < cfg.n_visits; ++v) {
    const int cluster = v % cfg.n_clusters;  // round-robin keeps labels balanced
    PatientVisit visit;
    visit.visit_id = "visit" + std::to_string(v);

    const int size =
        min_visit_size +
        static_cast<int>(rng.uniform_index(
            static_cast<std::size_t>(max_visit_size - min_visit_size + 1)));
    std::vector<std::string> own = cluster_attrs[static_cast<std::size_t>(cluster)];
    std::vector<std::string> other;
    for (int c = 0; c < cfg.n_clusters; ++c) {
      if (c == cluster) continue;
      const auto& attrs = cluster_attrs[static_cast<std::size_t>(c)];
      other.insert(other.end(), attrs.begin(), attrs.end());
    }
    rng.shuffle(own);
    rng.shuffle(other);

    std::size_t own_next = 0, other_next = 0;
    for (int slot = 0; slot < size; ++slot) {
      const bool noisy = !other.empty() && rng.uniform() < cfg.noise_rate;
      std::string attr;
      if (noisy && other_next < other.size()) {
        attr = other[other_next++];
      } else if (own_next < own.size()) {
        attr = own[own_next++];
      } else if (other_next < other.size()) {
        attr = other[other_next++];
      } else {
        break;
      }
      MedicalRecord rec;
      rec.t = static_cast<double>(slot);
      rec.attribute = std::move(attr);
      if ((v + slot) % 5 == 0) rec.literal = "lt" + std::to_string(slot);
      visit.records.push_back(std::move(rec));
    }

    visit.labels.assign(static_cast<std::size_t>(cfg.n_clusters), 0);
    visit.labels[static_cast<std::size_t>(cluster)] = 1;
    data.ehr.visits.push_back(std::move(visit));
  }
  data.ehr.task_count = cfg.n_clusters;

  std::set<std::string> vocab;
  for (const PatientVisit& visit : data.ehr.visits) {
    for (const MedicalRecord& r : visit.records) vocab.insert(r.attribute);
  }
  data.ehr.attribute_vocab.assign(vocab.begin(), vocab.end());

  for (const std::string& name : data.ehr.attribute_vocab) {
    data.links.attributes.push_back(name);
    data.links.entities.push_back(name);
    data.links.scores.push_back(1.0);
  }
  data.links.rebuild_index();
  return data;
}

}  // namespace hypkg
