#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypkg/kg_store.hpp"
#include "hypkg/linker.hpp"

namespace hypkg {

struct MedicalRecord {
  double t = 0.0;                    // chart timestamp, seconds
  std::string attribute;             // e.g. a diagnosis or prescription name
  std::optional<std::string> literal;  // stored but not consumed by the model

  friend bool operator==(const MedicalRecord&, const MedicalRecord&) = default;
};

struct PatientVisit {
  std::string visit_id;
  std::vector<MedicalRecord> records;  // sorted by t ascending
  std::vector<int> labels;             // multi-hot, one entry per task

  friend bool operator==(const PatientVisit&, const PatientVisit&) = default;
};

struct EhrDataset {
  std::vector<PatientVisit> visits;
  std::vector<std::string> attribute_vocab;  // sorted distinct attributes
  int task_count = 0;

  friend bool operator==(const EhrDataset&, const EhrDataset&) = default;
};

// JSONL, one visit per line:
//   {"visit_id": ..., "records": [{"t":..., "a":..., "lt":...}, ...],
//    "labels": [0,1,...]}
EhrDataset load_ehr(const std::filesystem::path& path);
void save_ehr(const EhrDataset& ds, const std::filesystem::path& path);

struct SplitIndices {
  std::vector<int> train;  // indices into EhrDataset::visits, each sorted
  std::vector<int> val;
  std::vector<int> test;
};

// Seeded shuffle; val and test take floor(n * ratio) visits each, train the
// remainder. Ratios must be positive and sum to 1.
SplitIndices split_dataset(const EhrDataset& ds,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);

// CSV "visit_id,fold" with fold in {train, val, test}.
void save_split(const EhrDataset& ds, const SplitIndices& split,
                const std::filesystem::path& path);

struct SyntheticConfig {
  int n_clusters = 4;
  int attrs_per_cluster = 12;
  int n_visits = 400;
  double noise_rate = 0.1;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  KnowledgeGraph kg;
  EhrDataset ehr;
  LinkTable links;  // ground truth: identity on names
};

// Clustered toy world: the KG is n_clusters intra-connected cliques, each
// visit draws attributes mostly from one cluster, and the label is the
// one-hot cluster membership. Attribute names equal entity names, so the
// ground-truth link table is exact. Deterministic per seed.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

}  // namespace hypkg
