#include "hypkg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "hypkg/io.hpp"

namespace hypkg {

namespace {

double row_cosine(const Matrix& m, int a, int b) {
  const Vector va = m.row(a).transpose();
  const Vector vb = m.row(b).transpose();
  return cosine_similarity(va, vb);
}

}  // namespace

std::vector<double> similarity_delta(
    const Matrix& before, const Matrix& after,
    const std::vector<std::pair<int, int>>& node_pairs) {
  if (before.rows() != after.rows()) {
    throw std::invalid_argument("similarity_delta: row count mismatch");
  }
  std::vector<double> deltas;
  deltas.reserve(node_pairs.size());
  for (const auto& [a, b] : node_pairs) {
    if (a < 0 || b < 0 || a >= before.rows() || b >= before.rows()) {
      throw std::invalid_argument("similarity_delta: unknown node index");
    }
    deltas.push_back(row_cosine(after, a, b) - row_cosine(before, a, b));
  }
  return deltas;
}

PairStats cooccurrence_stats(const EhrDataset& ds, const LinkTable& links,
                             const std::string& entity_a,
                             const std::string& entity_b) {
  PairStats stats;
  stats.entity_a = entity_a;
  stats.entity_b = entity_b;

  const std::string* attr_a = links.attribute_of(entity_a);
  const std::string* attr_b = links.attribute_of(entity_b);

  long total_a = 0, total_b = 0, both = 0;
  for (const PatientVisit& visit : ds.visits) {
    bool has_a = false, has_b = false;
    for (const MedicalRecord& rec : visit.records) {
      if (attr_a && rec.attribute == *attr_a) has_a = true;
      if (attr_b && rec.attribute == *attr_b) has_b = true;
    }
    if (has_a) ++total_a;
    if (has_b) ++total_b;
    if (has_a && has_b) ++both;
  }

  stats.occurrence = both;
  stats.observed_a = attr_a != nullptr && total_a > 0;
  stats.observed_b = attr_b != nullptr && total_b > 0;
  stats.prevalence_a =
      total_a > 0 ? static_cast<double>(both) / static_cast<double>(total_a)
                  : 0.0;
  stats.prevalence_b =
      total_b > 0 ? static_cast<double>(both) / static_cast<double>(total_b)
                  : 0.0;
  return stats;
}

HighLowSummary high_low_study(
    const EhrDataset& ds, const LinkTable& links,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<double>& deltas) {
  if (pairs.size() != deltas.size()) {
    throw std::invalid_argument("high_low_study: pairs/deltas mismatch");
  }

  // Visit sets per attribute beat a rescan per pair.
  std::unordered_map<std::string, std::set<int>> visits_of;
  for (std::size_t i = 0; i < ds.visits.size(); ++i) {
    for (const MedicalRecord& rec : ds.visits[i].records) {
      visits_of[rec.attribute].insert(static_cast<int>(i));
    }
  }
  auto occurrence = [&](const std::string& entity_a,
                        const std::string& entity_b) -> long {
    const std::string* attr_a = links.attribute_of(entity_a);
    const std::string* attr_b = links.attribute_of(entity_b);
    if (!attr_a || !attr_b) return 0;
    auto it_a = visits_of.find(*attr_a);
    auto it_b = visits_of.find(*attr_b);
    if (it_a == visits_of.end() || it_b == visits_of.end()) return 0;
    long both = 0;
    for (int v : it_a->second) {
      if (it_b->second.count(v)) ++both;
    }
    return both;
  };

  HighLowSummary summary;
  double sum_high = 0.0, sum_low = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (occurrence(pairs[i].first, pairs[i].second) >= 1) {
      ++summary.high_count;
      sum_high += deltas[i];
    } else {
      ++summary.low_count;
      sum_low += deltas[i];
    }
  }
  if (summary.high_count > 0) {
    summary.mean_high = sum_high / static_cast<double>(summary.high_count);
  }
  if (summary.low_count > 0) {
    summary.mean_low = sum_low / static_cast<double>(summary.low_count);
  }
  if (summary.high_count > 0 && summary.low_count > 0 &&
      summary.mean_low != 0.0) {
    summary.relative_gap =
        (summary.mean_high - summary.mean_low) / std::abs(summary.mean_low);
  }
  return summary;
}

void save_delta_histogram(const std::vector<double>& deltas,
                          const std::vector<bool>& is_high,
                          const std::filesystem::path& path) {
  if (deltas.size() != is_high.size()) {
    throw std::invalid_argument("save_delta_histogram: size mismatch");
  }
  constexpr int kBins = 40;
  double lo = 0.0, hi = 0.0;
  if (!deltas.empty()) {
    lo = *std::min_element(deltas.begin(), deltas.end());
    hi = *std::max_element(deltas.begin(), deltas.end());
  }
  if (hi <= lo) hi = lo + 1e-12;
  const double width = (hi - lo) / kBins;

  std::vector<long> high(kBins, 0), low(kBins, 0);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    int bin = static_cast<int>((deltas[i] - lo) / width);
    bin = std::clamp(bin, 0, kBins - 1);
    if (is_high[i]) ++high[static_cast<std::size_t>(bin)];
    else ++low[static_cast<std::size_t>(bin)];
  }

  std::string out = "bin_start,bin_end,high_count,low_count\n";
  for (int b = 0; b < kBins; ++b) {
    out += format_double(lo + b * width);
    out += ',';
    out += format_double(lo + (b + 1) * width);
    out += ',';
    out += std::to_string(high[static_cast<std::size_t>(b)]);
    out += ',';
    out += std::to_string(low[static_cast<std::size_t>(b)]);
    out += '\n';
  }
  write_file(path, out);
}

void save_pair_stats(const std::vector<PairStats>& stats,
                     const std::filesystem::path& path) {
  std::string out =
      "entity_a,entity_b,delta,occurrence,prevalence_a,prevalence_b,class\n";
  for (const PairStats& s : stats) {
    out += csv_field(s.entity_a);
    out += ',';
    out += csv_field(s.entity_b);
    out += ',';
    out += format_double(s.delta);
    out += ',';
    out += std::to_string(s.occurrence);
    out += ',';
    out += format_double(s.prevalence_a);
    out += ',';
    out += format_double(s.prevalence_b);
    out += ',';
    out += (s.occurrence >= 1 ? "high" : "low");
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace hypkg
