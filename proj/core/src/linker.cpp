#include "hypkg/linker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

#include "hypkg/io.hpp"
#include "hypkg/rng.hpp"

namespace hypkg {

std::string normalize_name(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::ispunct(c) || std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

void MapEmbeddingProvider::insert(const std::string& name, Vector vec) {
  if (dim_ == 0) {
    dim_ = static_cast<int>(vec.size());
  } else if (dim_ != static_cast<int>(vec.size())) {
    throw std::invalid_argument("provider vectors must share one dimension");
  }
  vectors_[name] = std::move(vec);
}

std::optional<Vector> MapEmbeddingProvider::find(const std::string& name) const {
  auto it = vectors_.find(name);
  if (it == vectors_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MapEmbeddingProvider::names() const {
  std::vector<std::string> out;
  out.reserve(vectors_.size());
  for (const auto& [name, _] : vectors_) out.push_back(name);
  std::sort(out.begin(), out.end());
  return out;
}

MapEmbeddingProvider MapEmbeddingProvider::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding file: " + path.string());
  }
  std::string header;
  std::getline(in, header);  // "N d" header, validated by row widths below
  MapEmbeddingProvider provider;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("embedding row missing tab: " + line);
    }
    const std::vector<std::string> values = split(line.substr(tab + 1), ',');
    Vector vec(static_cast<Eigen::Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) {
      vec(static_cast<Eigen::Index>(k)) = std::stod(values[k]);
    }
    provider.insert(line.substr(0, tab), std::move(vec));
  }
  return provider;
}

ShuffledEmbeddingProvider::ShuffledEmbeddingProvider(
    const EmbeddingProvider& base, std::vector<std::string> universe,
    std::uint64_t seed)
    : base_(base) {
  std::sort(universe.begin(), universe.end());
  std::vector<std::string> shuffled = universe;
  Rng rng(seed);
  rng.shuffle(shuffled);
  for (std::size_t i = 0; i < universe.size(); ++i) {
    remap_.emplace(universe[i], shuffled[i]);
  }
}

std::optional<Vector> ShuffledEmbeddingProvider::find(
    const std::string& name) const {
  auto it = remap_.find(name);
  return base_.find(it == remap_.end() ? name : it->second);
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::vector<Candidate> top_candidates(const Vector& query,
                                      const std::vector<std::string>& names,
                                      const Matrix& vectors, int lc) {
  if (lc < 1) {
    throw std::invalid_argument("top_candidates: lc must be >= 1");
  }
  if (static_cast<Eigen::Index>(names.size()) != vectors.rows()) {
    throw std::invalid_argument("top_candidates: names/vectors mismatch");
  }
  std::vector<Candidate> all;
  all.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Vector row = vectors.row(static_cast<Eigen::Index>(i));
    all.push_back({names[i], cosine_similarity(query, row)});
  }
  auto better = [](const Candidate& lhs, const Candidate& rhs) {
    if (lhs.similarity != rhs.similarity) return lhs.similarity > rhs.similarity;
    return lhs.entity < rhs.entity;
  };
  const std::size_t keep = std::min<std::size_t>(all.size(),
                                                 static_cast<std::size_t>(lc));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                    all.end(), better);
  all.resize(keep);
  return all;
}

ReplayAdjudicator::ReplayAdjudicator(const std::filesystem::path& decisions_csv) {
  std::ifstream in(decisions_csv);
  if (!in) {
    throw std::runtime_error("cannot open decisions file: " +
                             decisions_csv.string());
  }
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = parse_csv_line(line);
    if (fields.size() != 2) {
      throw std::runtime_error("decisions row needs 2 fields: " + line);
    }
    decisions_[fields[0]] = fields[1];
  }
}

std::size_t ReplayAdjudicator::choose(const AttributeName& attribute,
                                      const std::vector<Candidate>& candidates) {
  auto it = decisions_.find(attribute.raw);
  if (it == decisions_.end()) return 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].entity == it->second) return i;
  }
  return 0;  // recorded entity not among candidates; keep the top one
}

const std::string* LinkTable::entity_of(const std::string& attribute) const {
  auto it = index.find(attribute);
  if (it == index.end()) return nullptr;
  return &entities[static_cast<std::size_t>(it->second)];
}

const std::string* LinkTable::attribute_of(const std::string& entity) const {
  auto it = reverse_.find(entity);
  if (it == reverse_.end()) return nullptr;
  return &attributes[static_cast<std::size_t>(it->second)];
}

void LinkTable::rebuild_index() {
  index.clear();
  reverse_.clear();
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    index.emplace(attributes[i], static_cast<int>(i));
    reverse_.emplace(entities[i], static_cast<int>(i));
  }
}

namespace {

struct Claim {
  double similarity;
  std::size_t attribute;  // position in the pending-attribute list
  std::string entity;
};

struct ClaimOrder {
  const std::vector<AttributeName>* attributes;
  // priority_queue pops the largest element, so "less" means lower priority
  bool operator()(const Claim& lhs, const Claim& rhs) const {
    if (lhs.similarity != rhs.similarity) return lhs.similarity < rhs.similarity;
    const std::string& la = (*attributes)[lhs.attribute].raw;
    const std::string& ra = (*attributes)[rhs.attribute].raw;
    if (la != ra) return la > ra;
    return lhs.entity > rhs.entity;
  }
};

}  // namespace

LinkTable link_attributes(const std::vector<AttributeName>& attributes,
                          const std::vector<std::string>& kg_names,
                          const EmbeddingProvider& provider,
                          Adjudicator& adjudicator,
                          const LinkOptions& options) {
  if (attributes.empty()) {
    throw std::invalid_argument("link_attributes: no attributes");
  }
  if (options.lc < 1) {
    throw std::invalid_argument("link_attributes: lc must be >= 1");
  }

  std::vector<std::string> entities = kg_names;
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  if (attributes.size() > entities.size()) {
    throw std::runtime_error(
        "link_attributes: more attributes than entities, one-to-one linking "
        "impossible");
  }
  {
    std::unordered_map<std::string, int> seen;
    for (const AttributeName& a : attributes) {
      if (++seen[a.raw] > 1) {
        throw std::invalid_argument("link_attributes: duplicate attribute: " +
                                    a.raw);
      }
    }
  }

  auto canon = [&](const std::string& normalized) {
    auto it = options.synonyms.find(normalized);
    return it == options.synonyms.end() ? normalized : it->second;
  };

  // Canonical normalized entity name -> raw entity; collisions keep the
  // lexicographically smallest raw name.
  std::unordered_map<std::string, std::string> by_normalized;
  for (const std::string& name : entities) {
    const std::string key = canon(normalize_name(name));
    auto it = by_normalized.find(key);
    if (it == by_normalized.end() || name < it->second) {
      by_normalized[key] = name;
    }
  }

  LinkTable table;
  table.attributes.reserve(attributes.size());
  std::unordered_map<std::string, std::size_t> slot;  // attribute -> row
  for (const AttributeName& a : attributes) {
    slot.emplace(a.raw, table.attributes.size());
    table.attributes.push_back(a.raw);
    table.entities.emplace_back();
    table.scores.push_back(0.0);
  }

  std::unordered_map<std::string, char> claimed;
  std::vector<std::size_t> pending;  // indices into `attributes`

  // Stage 1: exact normalized-name matches (through the synonym table).
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    const std::string key = canon(attributes[i].normalized);
    auto it = by_normalized.find(key);
    if (it != by_normalized.end() && !claimed.count(it->second)) {
      const std::size_t row = slot[attributes[i].raw];
      table.entities[row] = it->second;
      table.scores[row] = 1.0;
      claimed.emplace(it->second, 1);
    } else {
      pending.push_back(i);
    }
  }

  if (!pending.empty()) {
    // Stage 2: rank candidates by cosine similarity and adjudicate.
    Matrix entity_vectors(static_cast<Eigen::Index>(entities.size()),
                          provider.dim());
    for (std::size_t i = 0; i < entities.size(); ++i) {
      std::optional<Vector> vec = provider.find(entities[i]);
      if (!vec) vec = provider.find(normalize_name(entities[i]));
      if (!vec) {
        throw std::runtime_error("link_attributes: provider has no vector for "
                                 "entity: " + entities[i]);
      }
      entity_vectors.row(static_cast<Eigen::Index>(i)) = vec->transpose();
    }

    struct Pending {
      Vector query;
      std::vector<Candidate> ladder;  // adjudicated pick first
      std::size_t next = 0;
    };
    std::vector<Pending> state(pending.size());
    std::priority_queue<Claim, std::vector<Claim>, ClaimOrder> queue(
        ClaimOrder{&attributes});

    for (std::size_t p = 0; p < pending.size(); ++p) {
      const AttributeName& attr = attributes[pending[p]];
      std::optional<Vector> query = provider.find(attr.raw);
      if (!query) query = provider.find(attr.normalized);
      if (!query) {
        throw std::runtime_error(
            "link_attributes: provider has no vector for attribute: " +
            attr.raw);
      }
      std::vector<Candidate> candidates =
          top_candidates(*query, entities, entity_vectors, options.lc);
      const std::size_t pick = adjudicator.choose(attr, candidates);
      if (pick >= candidates.size()) {
        throw std::runtime_error("link_attributes: adjudicator pick out of "
                                 "range for attribute: " + attr.raw);
      }
      std::vector<Candidate> ladder;
      ladder.push_back(candidates[pick]);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i != pick) ladder.push_back(candidates[i]);
      }
      state[p] = Pending{std::move(*query), std::move(ladder), 1};
      queue.push(Claim{state[p].ladder[0].similarity, pending[p],
                       state[p].ladder[0].entity});
    }

    std::unordered_map<std::size_t, std::size_t> pending_pos;
    for (std::size_t p = 0; p < pending.size(); ++p) pending_pos[pending[p]] = p;

    // Stage 3: greedy assignment in descending similarity. A losing claim
    // falls back to its next unclaimed candidate; an attribute that exhausts
    // its ladder takes the best unclaimed entity overall.
    while (!queue.empty()) {
      const Claim claim = queue.top();
      queue.pop();
      const std::size_t row = slot[attributes[claim.attribute].raw];
      Pending& st = state[pending_pos[claim.attribute]];
      if (!claimed.count(claim.entity)) {
        table.entities[row] = claim.entity;
        table.scores[row] = claim.similarity;
        claimed.emplace(claim.entity, 1);
        continue;
      }
      bool repushed = false;
      while (st.next < st.ladder.size()) {
        const Candidate& cand = st.ladder[st.next];
        ++st.next;
        if (!claimed.count(cand.entity)) {
          queue.push(Claim{cand.similarity, claim.attribute, cand.entity});
          repushed = true;
          break;
        }
      }
      if (repushed) continue;
      // Ladder exhausted: best unclaimed entity overall.
      const std::string* best_entity = nullptr;
      double best_sim = 0.0;
      for (std::size_t i = 0; i < entities.size(); ++i) {
        if (claimed.count(entities[i])) continue;
        const Vector row_vec = entity_vectors.row(static_cast<Eigen::Index>(i));
        const double sim = cosine_similarity(st.query, row_vec);
        if (best_entity == nullptr || sim > best_sim ||
            (sim == best_sim && entities[i] < *best_entity)) {
          best_entity = &entities[i];
          best_sim = sim;
        }
      }
      if (best_entity == nullptr) {
        throw std::runtime_error("link_attributes: ran out of entities");
      }
      table.entities[row] = *best_entity;
      table.scores[row] = best_sim;
      claimed.emplace(*best_entity, 1);
    }
  }

  table.rebuild_index();
  return table;
}

void save_link_table(const LinkTable& links, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < links.attributes.size(); ++i) {
    out += csv_field(links.attributes[i]);
    out += ',';
    out += csv_field(links.entities[i]);
    out += ',';
    out += format_fixed(links.scores[i], 6);
    out += '\n';
  }
  write_file(path, out);
}

LinkTable load_link_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open link table: " + path.string());
  }
  LinkTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = parse_csv_line(line);
    if (fields.size() != 3) {
      throw std::runtime_error("link table row needs 3 fields: " + line);
    }
    table.attributes.push_back(fields[0]);
    table.entities.push_back(fields[1]);
    table.scores.push_back(std::stod(fields[2]));
  }
  table.rebuild_index();
  return table;
}

std::unordered_map<std::string, std::string> load_synonyms(
    const std::filesystem::path& tsv_path) {
  std::ifstream in(tsv_path);
  if (!in) {
    throw std::runtime_error("cannot open synonym file: " + tsv_path.string());
  }
  std::unordered_map<std::string, std::string> synonyms;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2) {
      throw std::runtime_error("synonym row needs 2 tab-separated fields: " +
                               line);
    }
    synonyms[normalize_name(fields[0])] = normalize_name(fields[1]);
  }
  return synonyms;
}

}  // namespace hypkg
