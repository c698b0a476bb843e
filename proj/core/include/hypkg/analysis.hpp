#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypkg/ehr.hpp"
#include "hypkg/linker.hpp"
#include "hypkg/matrix.hpp"

namespace hypkg {

struct PairStats {
  std::string entity_a;
  std::string entity_b;
  double delta = 0.0;      // similarity after - before, in [-2, 2]
  long occurrence = 0;     // visits containing both entities
  double prevalence_a = 0.0;
  double prevalence_b = 0.0;
  bool observed_a = false;  // entity linked and seen in at least one visit
  bool observed_b = false;
};

// cosine(after_a, after_b) - cosine(before_a, before_b) per node pair. The
// two matrices may have different widths; cosine is computed within each.
std::vector<double> similarity_delta(
    const Matrix& before, const Matrix& after,
    const std::vector<std::pair<int, int>>& node_pairs);

// Co-occurrence and prevalence of an entity pair over the visits, resolved
// through the link table. Unobserved entities yield flagged zero stats.
PairStats cooccurrence_stats(const EhrDataset& ds, const LinkTable& links,
                             const std::string& entity_a,
                             const std::string& entity_b);

struct HighLowSummary {
  long high_count = 0;  // pairs that co-occur at least once
  long low_count = 0;   // pairs that never co-occur
  double mean_high = 0.0;
  double mean_low = 0.0;
  std::optional<double> relative_gap;  // (high - low) / |low| when defined
};

// Splits pairs into co-occurring (High) and never-co-occurring (Low) classes
// and summarises the similarity deltas per class.
HighLowSummary high_low_study(const EhrDataset& ds, const LinkTable& links,
                              const std::vector<std::pair<std::string, std::string>>& pairs,
                              const std::vector<double>& deltas);

// 40 uniform bins over the observed delta range, one CSV row per bin:
// "bin_start,bin_end,high_count,low_count".
void save_delta_histogram(const std::vector<double>& deltas,
                          const std::vector<bool>& is_high,
                          const std::filesystem::path& path);

// CSV "entity_a,entity_b,delta,occurrence,prevalence_a,prevalence_b,class".
void save_pair_stats(const std::vector<PairStats>& stats,
                     const std::filesystem::path& path);

}  // namespace hypkg
