#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypkg/ehr.hpp"
#include "hypkg/kg_embed.hpp"
#include "hypkg/model.hpp"

namespace hypkg {

// Everything a full pipeline run needs; loadable from a sectioned key=value
// config file, with CLI flags overriding individual fields.
struct RunConfig {
  // [paths]
  std::string kg_path;
  std::string ehr_path;
  std::string lm_embeddings_path;  // linker provider; optional
  std::string synonyms_path;       // optional thesaurus TSV
  std::string replay_path;         // replay adjudicator decisions; optional
  std::string out_dir = "runs/out";

  // [linker]
  int lc = 10;
  std::string adjudicator = "argmax";  // argmax | replay

  // [subsample]
  int k = 800;
  bool one_hop = true;

  // [embed]
  EmbedTrainConfig embed;

  // [model]
  int layers = 3;
  int hidden_dim = 48;
  int heads = 4;
  int final_dim = 48;
  bool residual = false;

  // [train]
  TrainConfig train;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};

  // [ablation]
  bool shuffle_hyperedges_flag = false;  // "kg-only"
  bool random_node_init = false;         // "ehr-only"
  bool shuffle_link_embeddings = false;  // shuffled-provider linking

  // [run]
  int repeats = 1;
  std::uint64_t seed = 7;
  long analysis_max_pairs = 200000;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Sorted "section.key=value" lines; hashing this pins the whole config.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// A pipeline failure annotated with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

// Stage building blocks, shared by the subcommands and the full run.
LinkTable stage_link(const RunConfig& cfg, const KnowledgeGraph& kg,
                     const EhrDataset& ehr, std::uint64_t seed);
KnowledgeGraph stage_subsample(const RunConfig& cfg, const KnowledgeGraph& kg,
                               const LinkTable& links);
EmbeddingTable stage_embed(const RunConfig& cfg, const KnowledgeGraph& kg_sub,
                           std::uint64_t seed);

struct RunOutput {
  MetricReport report;
  std::filesystem::path run_dir;
};

// One seeded repeat; writes all per-run artifacts under run_dir.
RunOutput run_single(const RunConfig& cfg, const KnowledgeGraph& kg,
                     const EhrDataset& ehr, std::uint64_t seed,
                     const std::filesystem::path& run_dir);

// Full protocol: repeats with seeds seed+0..repeats-1, a manifest, per-run
// metrics and a mean/std summary. Returns the per-run reports.
std::vector<MetricReport> run_pipeline(const RunConfig& cfg);

void write_manifest(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Scores/labels CSV: "visit_id,v1,...,vT" rows, no header.
void save_scores_csv(const std::vector<std::string>& ids, const Matrix& values,
                     const std::filesystem::path& path);
std::pair<std::vector<std::string>, Matrix> load_scores_csv(
    const std::filesystem::path& path);

// Mean/population-std summary of the per-run reports.
std::string summary_json(const std::vector<MetricReport>& runs);

extern const char* const kVersion;

}  // namespace hypkg
