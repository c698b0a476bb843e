#include "hypkg/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hypkg/analysis.hpp"
#include "hypkg/hypergraph.hpp"
#include "hypkg/io.hpp"

namespace hypkg {

using nlohmann::json;

const char* const kVersion = "hypkg-0.1.0";

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": " + value);
}

long parse_long(const std::string& value, const std::string& key) {
  long out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw std::runtime_error("config: bad integer for " + key + ": " + value);
  }
  return out;
}

double parse_real(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": " + value);
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config: " + path.string());
  }
  RunConfig cfg;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[' && text.back() == ']') {
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = section + "." + trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));

    if (key == "paths.kg") cfg.kg_path = value;
    else if (key == "paths.ehr") cfg.ehr_path = value;
    else if (key == "paths.lm_embeddings") cfg.lm_embeddings_path = value;
    else if (key == "paths.synonyms") cfg.synonyms_path = value;
    else if (key == "paths.replay") cfg.replay_path = value;
    else if (key == "paths.out") cfg.out_dir = value;
    else if (key == "linker.lc") cfg.lc = static_cast<int>(parse_long(value, key));
    else if (key == "linker.adjudicator") cfg.adjudicator = value;
    else if (key == "subsample.k") cfg.k = static_cast<int>(parse_long(value, key));
    else if (key == "subsample.one_hop") cfg.one_hop = parse_bool(value, key);
    else if (key == "embed.model") {
      if (value == "complex") cfg.embed.model = EmbeddingKind::kComplex;
      else if (value == "transe") cfg.embed.model = EmbeddingKind::kTranslational;
      else throw std::runtime_error("config: unknown embed.model: " + value);
    }
    else if (key == "embed.dim") cfg.embed.dim = static_cast<int>(parse_long(value, key));
    else if (key == "embed.epochs") cfg.embed.epochs = static_cast<int>(parse_long(value, key));
    else if (key == "embed.learning_rate") cfg.embed.learning_rate = parse_real(value, key);
    else if (key == "embed.negatives") cfg.embed.negatives_per_positive = static_cast<int>(parse_long(value, key));
    else if (key == "embed.batch_size") cfg.embed.batch_size = static_cast<int>(parse_long(value, key));
    else if (key == "model.layers") cfg.layers = static_cast<int>(parse_long(value, key));
    else if (key == "model.hidden_dim") cfg.hidden_dim = static_cast<int>(parse_long(value, key));
    else if (key == "model.heads") cfg.heads = static_cast<int>(parse_long(value, key));
    else if (key == "model.final_dim") cfg.final_dim = static_cast<int>(parse_long(value, key));
    else if (key == "model.residual") cfg.residual = parse_bool(value, key);
    else if (key == "train.learning_rate") cfg.train.learning_rate = parse_real(value, key);
    else if (key == "train.weight_decay") cfg.train.weight_decay = parse_real(value, key);
    else if (key == "train.epochs") cfg.train.epochs = static_cast<int>(parse_long(value, key));
    else if (key == "train.eval_every") cfg.train.eval_every = static_cast<int>(parse_long(value, key));
    else if (key == "train.train_ratio") cfg.ratios[0] = parse_real(value, key);
    else if (key == "train.val_ratio") cfg.ratios[1] = parse_real(value, key);
    else if (key == "train.test_ratio") cfg.ratios[2] = parse_real(value, key);
    else if (key == "ablation.shuffle_hyperedges") cfg.shuffle_hyperedges_flag = parse_bool(value, key);
    else if (key == "ablation.random_node_init") cfg.random_node_init = parse_bool(value, key);
    else if (key == "ablation.embedding_shuffle") cfg.shuffle_link_embeddings = parse_bool(value, key);
    else if (key == "run.repeats") cfg.repeats = static_cast<int>(parse_long(value, key));
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
    else if (key == "run.analysis_max_pairs") cfg.analysis_max_pairs = parse_long(value, key);
    else throw std::runtime_error("config: unknown key: " + key);
  }
  return cfg;
}

std::string canonical_config(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["paths.kg"] = cfg.kg_path;
  kv["paths.ehr"] = cfg.ehr_path;
  kv["paths.lm_embeddings"] = cfg.lm_embeddings_path;
  kv["paths.synonyms"] = cfg.synonyms_path;
  kv["paths.replay"] = cfg.replay_path;
  kv["paths.out"] = cfg.out_dir;
  kv["linker.lc"] = std::to_string(cfg.lc);
  kv["linker.adjudicator"] = cfg.adjudicator;
  kv["subsample.k"] = std::to_string(cfg.k);
  kv["subsample.one_hop"] = cfg.one_hop ? "true" : "false";
  kv["embed.model"] =
      cfg.embed.model == EmbeddingKind::kComplex ? "complex" : "transe";
  kv["embed.dim"] = std::to_string(cfg.embed.dim);
  kv["embed.epochs"] = std::to_string(cfg.embed.epochs);
  kv["embed.learning_rate"] = format_double(cfg.embed.learning_rate);
  kv["embed.negatives"] = std::to_string(cfg.embed.negatives_per_positive);
  kv["embed.batch_size"] = std::to_string(cfg.embed.batch_size);
  kv["model.layers"] = std::to_string(cfg.layers);
  kv["model.hidden_dim"] = std::to_string(cfg.hidden_dim);
  kv["model.heads"] = std::to_string(cfg.heads);
  kv["model.final_dim"] = std::to_string(cfg.final_dim);
  kv["model.residual"] = cfg.residual ? "true" : "false";
  kv["train.learning_rate"] = format_double(cfg.train.learning_rate);
  kv["train.weight_decay"] = format_double(cfg.train.weight_decay);
  kv["train.epochs"] = std::to_string(cfg.train.epochs);
  kv["train.eval_every"] = std::to_string(cfg.train.eval_every);
  kv["train.train_ratio"] = format_double(cfg.ratios[0]);
  kv["train.val_ratio"] = format_double(cfg.ratios[1]);
  kv["train.test_ratio"] = format_double(cfg.ratios[2]);
  kv["ablation.shuffle_hyperedges"] = cfg.shuffle_hyperedges_flag ? "true" : "false";
  kv["ablation.random_node_init"] = cfg.random_node_init ? "true" : "false";
  kv["ablation.embedding_shuffle"] = cfg.shuffle_link_embeddings ? "true" : "false";
  kv["run.repeats"] = std::to_string(cfg.repeats);
  kv["run.seed"] = std::to_string(cfg.seed);
  kv["run.analysis_max_pairs"] = std::to_string(cfg.analysis_max_pairs);

  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  return to_hex(fnv1a64(canonical_config(cfg)));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return base ^ fnv1a64(tag);
}

LinkTable stage_link(const RunConfig& cfg, const KnowledgeGraph& kg,
                     const EhrDataset& ehr, std::uint64_t seed) {
  try {
    std::vector<AttributeName> attributes;
    attributes.reserve(ehr.attribute_vocab.size());
    for (const std::string& a : ehr.attribute_vocab) {
      attributes.push_back(AttributeName::of(a));
    }

    MapEmbeddingProvider file_provider;
    if (!cfg.lm_embeddings_path.empty()) {
      file_provider = MapEmbeddingProvider::from_file(cfg.lm_embeddings_path);
    }

    LinkOptions options;
    options.lc = cfg.lc;
    if (!cfg.synonyms_path.empty()) {
      options.synonyms = load_synonyms(cfg.synonyms_path);
    }

    std::unique_ptr<Adjudicator> adjudicator;
    if (cfg.adjudicator == "replay") {
      if (cfg.replay_path.empty()) {
        throw std::runtime_error("replay adjudicator needs paths.replay");
      }
      adjudicator = std::make_unique<ReplayAdjudicator>(cfg.replay_path);
    } else if (cfg.adjudicator == "argmax") {
      adjudicator = std::make_unique<ArgmaxAdjudicator>();
    } else {
      throw std::runtime_error("unknown adjudicator: " + cfg.adjudicator);
    }

    if (cfg.shuffle_link_embeddings) {
      ShuffledEmbeddingProvider shuffled(file_provider, kg.entity_names(),
                                         derive_seed(seed, "link-shuffle"));
      return link_attributes(attributes, kg.entity_names(), shuffled,
                             *adjudicator, options);
    }
    return link_attributes(attributes, kg.entity_names(), file_provider,
                           *adjudicator, options);
  } catch (const std::exception& e) {
    throw StageError("link", e.what());
  }
}

KnowledgeGraph stage_subsample(const RunConfig& cfg, const KnowledgeGraph& kg,
                               const LinkTable& links) {
  try {
    std::vector<EntityId> anchors;
    for (const std::string& entity : links.entities) {
      if (auto id = kg.find_entity(entity)) anchors.push_back(*id);
    }
    if (anchors.empty()) {
      throw std::runtime_error("no linked entity exists in the graph");
    }
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    KnowledgeGraph sub = subsample_kg(kg, anchors, cfg.k,
                                      cfg.one_hop
                                          ? SubsampleScope::kLinkedPlusOneHop
                                          : SubsampleScope::kLinkedOnly);
    if (sub.triples().empty()) {
      throw std::runtime_error("subsampled graph has no triples");
    }
    return sub;
  } catch (const std::exception& e) {
    throw StageError("subsample", e.what());
  }
}

EmbeddingTable stage_embed(const RunConfig& cfg, const KnowledgeGraph& kg_sub,
                           std::uint64_t seed) {
  try {
    EmbedTrainConfig etc = cfg.embed;
    etc.seed = derive_seed(seed, "embed");
    return train_embeddings(kg_sub, etc);
  } catch (const std::exception& e) {
    throw StageError("embed", e.what());
  }
}

namespace {

Matrix labels_matrix(const EhrDataset& ehr) {
  Matrix labels(static_cast<Eigen::Index>(ehr.visits.size()), ehr.task_count);
  for (std::size_t i = 0; i < ehr.visits.size(); ++i) {
    for (int t = 0; t < ehr.task_count; ++t) {
      labels(static_cast<Eigen::Index>(i), t) =
          ehr.visits[i].labels[static_cast<std::size_t>(t)];
    }
  }
  return labels;
}

void save_node_matrix(const std::vector<std::string>& names, const Matrix& m,
                      const std::filesystem::path& path) {
  EmbeddingTable table;
  table.kind = EmbeddingKind::kExternal;
  table.dim = static_cast<int>(m.cols());
  table.entity_vectors = m;
  table.entity_names = names;
  save_embeddings(table, path);
}

}  // namespace

RunOutput run_single(const RunConfig& cfg, const KnowledgeGraph& kg,
                     const EhrDataset& ehr, std::uint64_t seed,
                     const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);

  const LinkTable links = stage_link(cfg, kg, ehr, seed);
  save_link_table(links, run_dir / "links.csv");

  const KnowledgeGraph kg_sub = stage_subsample(cfg, kg, links);
  save_triples(kg_sub, run_dir / "kg_sub.tsv");
  save_entity_map(kg_sub, run_dir / "kg_sub_entities.tsv");

  const EmbeddingTable table = stage_embed(cfg, kg_sub, seed);
  save_embeddings(table, run_dir / "embeddings.tsv");

  Hypergraph hg;
  Matrix features;
  try {
    hg = build_hypergraph(ehr, links);
    if (cfg.shuffle_hyperedges_flag) {
      hg = shuffle_hyperedges(hg, derive_seed(seed, "shuffle-edges"));
    }
    features = cfg.random_node_init
                   ? random_node_features(hg.node_count(), table.dim,
                                          derive_seed(seed, "random-features"))
                   : init_node_features(hg, table, links);
    save_hypergraph(hg, run_dir / "hypergraph.jsonl");
    save_node_matrix(hg.node_attributes, features,
                     run_dir / "node_embeddings_before.tsv");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("build", e.what());
  }

  TrainResult tr;
  SplitIndices split;
  try {
    split = split_dataset(ehr, cfg.ratios, derive_seed(seed, "split"));
    save_split(ehr, split, run_dir / "split.csv");

    ModelConfig mc;
    mc.input_dim = table.dim;
    mc.hidden_dim = cfg.hidden_dim;
    mc.heads = cfg.heads;
    mc.layers = cfg.layers;
    mc.final_dim = cfg.final_dim;
    mc.task_count = ehr.task_count;
    mc.residual = cfg.residual;

    TrainConfig tc = cfg.train;
    tc.seed = seed;
    const ModelParams params0 = init_params(mc, derive_seed(seed, "init"));
    const Matrix labels = labels_matrix(ehr);
    tr = train(hg, features, labels, split, params0, tc);

    save_checkpoint(tr.best_params, seed, tr.best_epoch,
                    run_dir / "checkpoint.bin");
    save_history(tr.history, run_dir / "history.csv");
    write_file(run_dir / "metrics.json", tr.test_report.to_json());
    save_node_matrix(hg.node_attributes, tr.node_embeddings,
                     run_dir / "node_embeddings_after.tsv");

    std::vector<std::string> test_ids;
    for (int e : split.test) {
      test_ids.push_back(ehr.visits[static_cast<std::size_t>(e)].visit_id);
    }
    save_scores_csv(test_ids, gather_rows(tr.probabilities, split.test),
                    run_dir / "predictions.csv");
    save_scores_csv(test_ids, gather_rows(labels, split.test),
                    run_dir / "test_labels.csv");
  } catch (const std::exception& e) {
    throw StageError("train", e.what());
  }

  try {
    std::vector<std::pair<int, int>> node_pairs;
    std::vector<std::pair<std::string, std::string>> entity_pairs;
    const long cap = cfg.analysis_max_pairs;
    for (std::size_t i = 0; i < hg.node_count() && static_cast<long>(node_pairs.size()) < cap; ++i) {
      for (std::size_t j = i + 1; j < hg.node_count() && static_cast<long>(node_pairs.size()) < cap; ++j) {
        node_pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        const std::string* ea = links.entity_of(hg.node_attributes[i]);
        const std::string* eb = links.entity_of(hg.node_attributes[j]);
        entity_pairs.emplace_back(*ea, *eb);
      }
    }
    const std::vector<double> deltas =
        similarity_delta(features, tr.node_embeddings, node_pairs);

    std::vector<PairStats> stats;
    std::vector<bool> is_high;
    stats.reserve(node_pairs.size());
    for (std::size_t p = 0; p < node_pairs.size(); ++p) {
      PairStats s = cooccurrence_stats(ehr, links, entity_pairs[p].first,
                                       entity_pairs[p].second);
      s.delta = deltas[p];
      is_high.push_back(s.occurrence >= 1);
      stats.push_back(std::move(s));
    }
    save_pair_stats(stats, run_dir / "pair_stats.csv");
    save_delta_histogram(deltas, is_high, run_dir / "delta_histogram.csv");

    const HighLowSummary summary =
        high_low_study(ehr, links, entity_pairs, deltas);
    json j;
    j["high"] = {{"count", summary.high_count}, {"mean_delta", summary.mean_high}};
    j["low"] = {{"count", summary.low_count}, {"mean_delta", summary.mean_low}};
    if (summary.relative_gap) j["relative_gap"] = *summary.relative_gap;
    else j["relative_gap"] = nullptr;
    write_file(run_dir / "highlow.json", j.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw StageError("analyze", e.what());
  }

  return RunOutput{tr.test_report, run_dir};
}

void write_manifest(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  json manifest;
  manifest["version"] = kVersion;
  manifest["config_hash"] = config_hash(cfg);
  json config_lines = json::array();
  for (const std::string& line : split(canonical_config(cfg), '\n')) {
    if (!line.empty()) config_lines.push_back(line);
  }
  manifest["config"] = std::move(config_lines);
  json seeds = json::array();
  for (int r = 0; r < cfg.repeats; ++r) {
    seeds.push_back(cfg.seed + static_cast<std::uint64_t>(r));
  }
  manifest["seeds"] = std::move(seeds);
  json inputs;
  for (const std::string& path :
       {cfg.kg_path, cfg.ehr_path, cfg.lm_embeddings_path, cfg.synonyms_path,
        cfg.replay_path}) {
    if (!path.empty() && std::filesystem::exists(path)) {
      inputs[path] = to_hex(file_checksum(path));
    }
  }
  manifest["inputs"] = std::move(inputs);
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string summary_json(const std::vector<MetricReport>& runs) {
  auto stat = [&](auto getter) {
    json j;
    json values = json::array();
    double mean = 0.0;
    for (const MetricReport& r : runs) {
      values.push_back(getter(r));
      mean += getter(r);
    }
    mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const MetricReport& r : runs) {
      const double d = getter(r) - mean;
      var += d * d;
    }
    var /= static_cast<double>(runs.size());  // population std over repeats
    j["mean"] = mean;
    j["std"] = std::sqrt(var);
    j["runs"] = std::move(values);
    return j;
  };

  json j;
  j["accuracy"] = stat([](const MetricReport& r) { return r.accuracy; });
  j["auroc"] = stat([](const MetricReport& r) { return r.auroc; });
  j["aucpr"] = stat([](const MetricReport& r) { return r.aucpr; });
  j["macro_f1"] = stat([](const MetricReport& r) { return r.macro_f1; });
  return j.dump(2) + "\n";
}

std::vector<MetricReport> run_pipeline(const RunConfig& cfg) {
  if (cfg.repeats < 1) {
    throw StageError("run", "repeats must be >= 1");
  }
  if (cfg.kg_path.empty() || cfg.ehr_path.empty()) {
    throw StageError("run", "paths.kg and paths.ehr are required");
  }

  const std::filesystem::path out_dir = cfg.out_dir;
  std::filesystem::create_directories(out_dir);
  write_manifest(cfg, out_dir);

  KnowledgeGraph kg;
  EhrDataset ehr;
  try {
    kg = load_triples(cfg.kg_path);
    ehr = load_ehr(cfg.ehr_path);
  } catch (const std::exception& e) {
    throw StageError("load", e.what());
  }

  std::vector<MetricReport> reports;
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    const std::filesystem::path run_dir =
        out_dir / ("run_" + std::to_string(r));
    reports.push_back(run_single(cfg, kg, ehr, seed, run_dir).report);
  }

  write_file(out_dir / "summary.json", summary_json(reports));
  return reports;
}

void save_scores_csv(const std::vector<std::string>& ids, const Matrix& values,
                     const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(ids.size()) != values.rows()) {
    throw std::invalid_argument("save_scores_csv: ids/rows mismatch");
  }
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += csv_field(ids[i]);
    for (Eigen::Index t = 0; t < values.cols(); ++t) {
      out += ',';
      out += format_double(values(static_cast<Eigen::Index>(i), t));
    }
    out += '\n';
  }
  write_file(path, out);
}

std::pair<std::vector<std::string>, Matrix> load_scores_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scores file: " + path.string());
  }
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = parse_csv_line(line);
    if (fields.size() < 2) {
      throw std::runtime_error("scores row needs an id and a value: " + line);
    }
    ids.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      row.push_back(std::stod(fields[k]));
    }
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw std::runtime_error("scores rows have inconsistent widths");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::runtime_error("scores file is empty: " + path.string());
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return {std::move(ids), std::move(m)};
}

}  // namespace hypkg
