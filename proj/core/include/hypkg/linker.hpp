#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypkg/matrix.hpp"

namespace hypkg {

// Lowercases, replaces every punctuation character with a space, collapses
// whitespace runs, and trims.
std::string normalize_name(std::string_view raw);

struct AttributeName {
  std::string raw;
  std::string normalized;

  static AttributeName of(std::string_view raw_name) {
    return {std::string(raw_name), normalize_name(raw_name)};
  }
};

// Source of fixed-width vectors keyed by name (e.g. precomputed language
// model embeddings read from an embedding file).
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::optional<Vector> find(const std::string& name) const = 0;
  virtual int dim() const = 0;
};

class MapEmbeddingProvider : public EmbeddingProvider {
 public:
  MapEmbeddingProvider() = default;
  void insert(const std::string& name, Vector vec);
  std::optional<Vector> find(const std::string& name) const override;
  int dim() const override { return dim_; }
  std::vector<std::string> names() const;

  static MapEmbeddingProvider from_file(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, Vector> vectors_;
  int dim_ = 0;
};

// Ablation hook: permutes the vector assignment over a fixed name universe.
class ShuffledEmbeddingProvider : public EmbeddingProvider {
 public:
  ShuffledEmbeddingProvider(const EmbeddingProvider& base,
                            std::vector<std::string> universe,
                            std::uint64_t seed);
  std::optional<Vector> find(const std::string& name) const override;
  int dim() const override { return base_.dim(); }

 private:
  const EmbeddingProvider& base_;
  std::unordered_map<std::string, std::string> remap_;
};

// a.b / (|a||b|); zero vectors yield 0.
double cosine_similarity(const Vector& a, const Vector& b);

struct Candidate {
  std::string entity;
  double similarity;
};

// The `lc` entities most cosine-similar to the query, descending; ties break
// by lexicographic entity string. Fewer than `lc` entities: all, ranked.
std::vector<Candidate> top_candidates(const Vector& query,
                                      const std::vector<std::string>& names,
                                      const Matrix& vectors, int lc);

// Chooses one entity from a candidate list.
class Adjudicator {
 public:
  virtual ~Adjudicator() = default;
  virtual std::size_t choose(const AttributeName& attribute,
                             const std::vector<Candidate>& candidates) = 0;
};

class ArgmaxAdjudicator : public Adjudicator {
 public:
  std::size_t choose(const AttributeName&,
                     const std::vector<Candidate>&) override {
    return 0;
  }
};

// Replays decisions from a CSV of "attribute,chosen_entity" rows; attributes
// without a recorded decision fall back to the top candidate.
class ReplayAdjudicator : public Adjudicator {
 public:
  explicit ReplayAdjudicator(const std::filesystem::path& decisions_csv);
  std::size_t choose(const AttributeName& attribute,
                     const std::vector<Candidate>& candidates) override;

 private:
  std::unordered_map<std::string, std::string> decisions_;
};

// One-to-one attribute -> entity assignment with similarity scores.
struct LinkTable {
  std::vector<std::string> attributes;  // raw names, input order
  std::vector<std::string> entities;    // raw KG names
  std::vector<double> scores;
  std::unordered_map<std::string, int> index;  // attribute -> position

  const std::string* entity_of(const std::string& attribute) const;
  const std::string* attribute_of(const std::string& entity) const;
  void rebuild_index();

 private:
  mutable std::unordered_map<std::string, int> reverse_;
};

struct LinkOptions {
  int lc = 10;
  // Optional thesaurus: normalized name -> canonical normalized name.
  std::unordered_map<std::string, std::string> synonyms;
};

// Stage 1 links exact normalized-name matches; stage 2 ranks top-lc
// candidates per remaining attribute and lets the adjudicator pick; stage 3
// resolves conflicts greedily by descending similarity so the result is
// injective and total.
LinkTable link_attributes(const std::vector<AttributeName>& attributes,
                          const std::vector<std::string>& kg_names,
                          const EmbeddingProvider& provider,
                          Adjudicator& adjudicator,
                          const LinkOptions& options = {});

// CSV "attribute,entity,similarity" with 6-decimal similarity.
void save_link_table(const LinkTable& links, const std::filesystem::path& path);
LinkTable load_link_table(const std::filesystem::path& path);

std::unordered_map<std::string, std::string> load_synonyms(
    const std::filesystem::path& tsv_path);

}  // namespace hypkg
