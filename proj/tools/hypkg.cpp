// hypkg command-line interface: synthetic data generation, entity linking,
// KG embedding, hypergraph construction, training, evaluation and the
// knowledge-representation analysis, plus the full seeded pipeline.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypkg/analysis.hpp"
#include "hypkg/ehr.hpp"
#include "hypkg/hypergraph.hpp"
#include "hypkg/io.hpp"
#include "hypkg/kg_embed.hpp"
#include "hypkg/kg_store.hpp"
#include "hypkg/linker.hpp"
#include "hypkg/metrics.hpp"
#include "hypkg/model.hpp"
#include "hypkg/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print_error(const std::string& stage, const std::string& message) {
  json record;
  record["error"] = {{"stage", stage}, {"message", message}};
  std::cerr << record.dump() << "\n";
}

struct SynthArgs {
  std::string out_dir = "data";
  int clusters = 4;
  int attrs = 12;
  int visits = 400;
  double noise = 0.1;
  std::uint64_t seed = 7;
};

int cmd_synth(const SynthArgs& args) {
  hypkg::SyntheticConfig cfg;
  cfg.n_clusters = args.clusters;
  cfg.attrs_per_cluster = args.attrs;
  cfg.n_visits = args.visits;
  cfg.noise_rate = args.noise;
  cfg.seed = args.seed;
  const hypkg::SyntheticData data = hypkg::generate_synthetic(cfg);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  hypkg::save_triples(data.kg, out / "kg.tsv");
  hypkg::save_ehr(data.ehr, out / "ehr.jsonl");
  hypkg::save_link_table(data.links, out / "links_truth.csv");
  std::cout << "wrote " << (out / "kg.tsv").string() << " ("
            << data.kg.triples().size() << " triples), "
            << (out / "ehr.jsonl").string() << " (" << data.ehr.visits.size()
            << " visits), " << (out / "links_truth.csv").string() << "\n";
  return 0;
}

struct LinkArgs {
  std::string kg_path;
  std::string ehr_path;
  std::string out_path = "links.csv";
  std::string lm_embeddings;
  std::string synonyms;
  std::string replay;
  std::string adjudicator = "argmax";
  int lc = 10;
  bool shuffle = false;
  std::uint64_t seed = 7;
};

int cmd_link(const LinkArgs& args) {
  hypkg::RunConfig cfg;
  cfg.lm_embeddings_path = args.lm_embeddings;
  cfg.synonyms_path = args.synonyms;
  cfg.replay_path = args.replay;
  cfg.adjudicator = args.adjudicator;
  cfg.lc = args.lc;
  cfg.shuffle_link_embeddings = args.shuffle;

  const hypkg::KnowledgeGraph kg = hypkg::load_triples(args.kg_path);
  const hypkg::EhrDataset ehr = hypkg::load_ehr(args.ehr_path);
  const hypkg::LinkTable links = hypkg::stage_link(cfg, kg, ehr, args.seed);
  hypkg::save_link_table(links, args.out_path);
  std::cout << "linked " << links.attributes.size() << " attributes -> "
            << args.out_path << "\n";
  return 0;
}

struct EmbedArgs {
  std::string kg_path;
  std::string links_path;
  std::string out_path = "embeddings.tsv";
  std::string subsampled_out;
  std::vector<std::string> external;
  std::string model = "complex";
  std::string scope = "one-hop";
  int k = 800;
  int dim = 128;
  int epochs = 200;
  double lr = 0.05;
  int negatives = 5;
  int batch = 128;
  std::uint64_t seed = 7;
};

int cmd_embed(const EmbedArgs& args) {
  if (!args.external.empty()) {
    // Fusion mode: concatenate externally supplied tables, PCA down to dim.
    std::vector<hypkg::EmbeddingTable> tables;
    for (const std::string& path : args.external) {
      tables.push_back(hypkg::load_embeddings(path));
    }
    std::vector<std::string> names;
    for (const std::string& name : tables.front().entity_names) {
      bool everywhere = true;
      for (const hypkg::EmbeddingTable& t : tables) {
        if (!t.entity_rows.count(name)) {
          everywhere = false;
          break;
        }
      }
      if (everywhere) names.push_back(name);
    }
    if (names.empty()) {
      throw std::runtime_error("embed: external tables share no entities");
    }
    if (names.size() != tables.front().entity_names.size()) {
      std::cerr << "embed: dropping "
                << tables.front().entity_names.size() - names.size()
                << " entities missing from some input\n";
    }
    int total_dim = 0;
    for (const hypkg::EmbeddingTable& t : tables) total_dim += t.dim;
    hypkg::Matrix fused(static_cast<Eigen::Index>(names.size()), total_dim);
    for (std::size_t i = 0; i < names.size(); ++i) {
      int offset = 0;
      for (const hypkg::EmbeddingTable& t : tables) {
        fused.row(static_cast<Eigen::Index>(i)).segment(offset, t.dim) =
            t.entity_vectors.row(t.entity_rows.at(names[i]));
        offset += t.dim;
      }
    }
    const hypkg::Matrix reduced = hypkg::pca_reduce(fused, args.dim);
    hypkg::EmbeddingTable out;
    out.kind = hypkg::EmbeddingKind::kExternal;
    out.dim = args.dim;
    out.entity_vectors = reduced;
    out.entity_names = names;
    hypkg::save_embeddings(out, args.out_path);
    std::cout << "fused " << tables.size() << " tables (" << total_dim
              << " dims) -> " << args.dim << " dims, " << names.size()
              << " entities -> " << args.out_path << "\n";
    return 0;
  }

  hypkg::RunConfig cfg;
  cfg.k = args.k;
  cfg.one_hop = args.scope != "linked";
  cfg.embed.dim = args.dim;
  cfg.embed.epochs = args.epochs;
  cfg.embed.learning_rate = args.lr;
  cfg.embed.negatives_per_positive = args.negatives;
  cfg.embed.batch_size = args.batch;
  cfg.embed.model = args.model == "transe"
                        ? hypkg::EmbeddingKind::kTranslational
                        : hypkg::EmbeddingKind::kComplex;

  hypkg::KnowledgeGraph kg = hypkg::load_triples(args.kg_path);
  if (!args.links_path.empty()) {
    const hypkg::LinkTable links = hypkg::load_link_table(args.links_path);
    kg = hypkg::stage_subsample(cfg, kg, links);
  }
  if (!args.subsampled_out.empty()) {
    hypkg::save_triples(kg, args.subsampled_out);
  }
  const hypkg::EmbeddingTable table = hypkg::stage_embed(cfg, kg, args.seed);
  hypkg::save_embeddings(table, args.out_path);
  std::cout << "trained " << (args.model == "transe" ? "TransE" : "ComplEx")
            << " embeddings for " << table.entity_names.size()
            << " entities -> " << args.out_path << "\n";
  return 0;
}

struct BuildArgs {
  std::string ehr_path;
  std::string links_path;
  std::string out_path = "hypergraph.jsonl";
  bool shuffle = false;
  std::uint64_t seed = 7;
};

int cmd_build(const BuildArgs& args) {
  const hypkg::EhrDataset ehr = hypkg::load_ehr(args.ehr_path);
  const hypkg::LinkTable links = hypkg::load_link_table(args.links_path);
  hypkg::Hypergraph hg = hypkg::build_hypergraph(ehr, links);
  if (args.shuffle) hg = hypkg::shuffle_hyperedges(hg, args.seed);
  hypkg::save_hypergraph(hg, args.out_path);
  std::cout << "hypergraph: " << hg.node_count() << " nodes, "
            << hg.edge_count() << " hyperedges -> " << args.out_path << "\n";
  return 0;
}

struct TrainArgs {
  std::string ehr_path;
  std::string links_path;
  std::string embeddings_path;
  std::string out_dir = "runs/train";
  int layers = 3;
  int hidden_dim = 48;
  int heads = 4;
  int final_dim = 48;
  bool residual = false;
  double lr = 1e-3;
  double weight_decay = 1e-3;
  int epochs = 1000;
  int eval_every = 10;
  double train_ratio = 0.7, val_ratio = 0.1, test_ratio = 0.2;
  bool shuffle_edges = false;
  bool random_init = false;
  std::uint64_t seed = 7;
};

int cmd_train(const TrainArgs& args) {
  const hypkg::EhrDataset ehr = hypkg::load_ehr(args.ehr_path);
  const hypkg::LinkTable links = hypkg::load_link_table(args.links_path);
  const hypkg::EmbeddingTable table =
      hypkg::load_embeddings(args.embeddings_path);

  hypkg::Hypergraph hg = hypkg::build_hypergraph(ehr, links);
  if (args.shuffle_edges) {
    hg = hypkg::shuffle_hyperedges(hg,
                                   hypkg::derive_seed(args.seed, "shuffle-edges"));
  }
  const hypkg::Matrix features =
      args.random_init
          ? hypkg::random_node_features(
                hg.node_count(), table.dim,
                hypkg::derive_seed(args.seed, "random-features"))
          : hypkg::init_node_features(hg, table, links);

  const hypkg::SplitIndices split = hypkg::split_dataset(
      ehr, {args.train_ratio, args.val_ratio, args.test_ratio},
      hypkg::derive_seed(args.seed, "split"));

  hypkg::ModelConfig mc;
  mc.input_dim = table.dim;
  mc.hidden_dim = args.hidden_dim;
  mc.heads = args.heads;
  mc.layers = args.layers;
  mc.final_dim = args.final_dim;
  mc.task_count = ehr.task_count;
  mc.residual = args.residual;

  hypkg::TrainConfig tc;
  tc.learning_rate = args.lr;
  tc.weight_decay = args.weight_decay;
  tc.epochs = args.epochs;
  tc.eval_every = args.eval_every;
  tc.seed = args.seed;

  hypkg::Matrix labels(static_cast<Eigen::Index>(ehr.visits.size()),
                       ehr.task_count);
  for (std::size_t i = 0; i < ehr.visits.size(); ++i) {
    for (int t = 0; t < ehr.task_count; ++t) {
      labels(static_cast<Eigen::Index>(i), t) =
          ehr.visits[i].labels[static_cast<std::size_t>(t)];
    }
  }

  const hypkg::ModelParams params0 =
      hypkg::init_params(mc, hypkg::derive_seed(args.seed, "init"));
  const hypkg::TrainResult tr =
      hypkg::train(hg, features, labels, split, params0, tc);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  hypkg::save_split(ehr, split, out / "split.csv");
  hypkg::save_checkpoint(tr.best_params, args.seed, tr.best_epoch,
                         out / "checkpoint.bin");
  hypkg::save_history(tr.history, out / "history.csv");
  hypkg::write_file(out / "metrics.json", tr.test_report.to_json());

  std::cout << "best epoch " << tr.best_epoch << " (val AUROC "
            << hypkg::format_double(tr.best_val_auroc) << "), test AUROC "
            << hypkg::format_double(tr.test_report.auroc) << " -> "
            << out.string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred_path;
  std::string labels_path;
  std::string out_path;
  double threshold = 0.5;
};

int cmd_eval(const EvalArgs& args) {
  auto [pred_ids, preds] = hypkg::load_scores_csv(args.pred_path);
  auto [label_ids, labels] = hypkg::load_scores_csv(args.labels_path);
  if (preds.cols() != labels.cols()) {
    throw std::runtime_error("eval: predictions and labels disagree on tasks");
  }
  std::unordered_map<std::string, Eigen::Index> label_row;
  for (std::size_t i = 0; i < label_ids.size(); ++i) {
    label_row[label_ids[i]] = static_cast<Eigen::Index>(i);
  }
  hypkg::Matrix aligned(preds.rows(), preds.cols());
  for (std::size_t i = 0; i < pred_ids.size(); ++i) {
    auto it = label_row.find(pred_ids[i]);
    if (it == label_row.end()) {
      throw std::runtime_error("eval: no labels for visit " + pred_ids[i]);
    }
    aligned.row(static_cast<Eigen::Index>(i)) = labels.row(it->second);
  }
  const hypkg::MetricReport report =
      hypkg::evaluate_multilabel(preds, aligned, args.threshold);
  const std::string text = report.to_json();
  if (!args.out_path.empty()) hypkg::write_file(args.out_path, text);
  std::cout << text;
  return 0;
}

struct AnalyzeArgs {
  std::string ehr_path;
  std::string links_path;
  std::string before_path;
  std::string after_path;
  std::string out_dir = "analysis";
  long max_pairs = 200000;
};

int cmd_analyze(const AnalyzeArgs& args) {
  const hypkg::EhrDataset ehr = hypkg::load_ehr(args.ehr_path);
  const hypkg::LinkTable links = hypkg::load_link_table(args.links_path);
  const hypkg::EmbeddingTable before = hypkg::load_embeddings(args.before_path);
  const hypkg::EmbeddingTable after = hypkg::load_embeddings(args.after_path);

  // Align the "after" rows to the "before" name order.
  hypkg::Matrix after_rows(before.entity_vectors.rows(), after.dim);
  for (std::size_t i = 0; i < before.entity_names.size(); ++i) {
    after_rows.row(static_cast<Eigen::Index>(i)) =
        after.entity_vectors.row(after.require_row(before.entity_names[i]));
  }

  std::vector<std::pair<int, int>> node_pairs;
  std::vector<std::pair<std::string, std::string>> entity_pairs;
  const std::size_t n = before.entity_names.size();
  for (std::size_t i = 0; i < n && static_cast<long>(node_pairs.size()) < args.max_pairs; ++i) {
    const std::string* ea = links.entity_of(before.entity_names[i]);
    if (!ea) continue;
    for (std::size_t j = i + 1; j < n && static_cast<long>(node_pairs.size()) < args.max_pairs; ++j) {
      const std::string* eb = links.entity_of(before.entity_names[j]);
      if (!eb) continue;
      node_pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
      entity_pairs.emplace_back(*ea, *eb);
    }
  }

  const std::vector<double> deltas =
      hypkg::similarity_delta(before.entity_vectors, after_rows, node_pairs);

  std::vector<hypkg::PairStats> stats;
  std::vector<bool> is_high;
  for (std::size_t p = 0; p < entity_pairs.size(); ++p) {
    hypkg::PairStats s = hypkg::cooccurrence_stats(
        ehr, links, entity_pairs[p].first, entity_pairs[p].second);
    s.delta = deltas[p];
    is_high.push_back(s.occurrence >= 1);
    stats.push_back(std::move(s));
  }

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  hypkg::save_pair_stats(stats, out / "pair_stats.csv");
  hypkg::save_delta_histogram(deltas, is_high, out / "delta_histogram.csv");

  const hypkg::HighLowSummary summary =
      hypkg::high_low_study(ehr, links, entity_pairs, deltas);
  json j;
  j["high"] = {{"count", summary.high_count}, {"mean_delta", summary.mean_high}};
  j["low"] = {{"count", summary.low_count}, {"mean_delta", summary.mean_low}};
  if (summary.relative_gap) j["relative_gap"] = *summary.relative_gap;
  else j["relative_gap"] = nullptr;
  hypkg::write_file(out / "highlow.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct RunArgs {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> kg_path;
  std::optional<std::string> ehr_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<int> lc;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string ablation;
};

int cmd_run(const RunArgs& args) {
  hypkg::RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = hypkg::load_run_config(args.config_path);
  }
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.kg_path) cfg.kg_path = *args.kg_path;
  if (args.ehr_path) cfg.ehr_path = *args.ehr_path;
  if (args.seed) cfg.seed = *args.seed;
  if (args.repeats) cfg.repeats = *args.repeats;
  if (args.lc) cfg.lc = *args.lc;
  if (args.epochs) cfg.train.epochs = *args.epochs;
  if (args.lr) cfg.train.learning_rate = *args.lr;
  if (args.ablation == "kg-only") cfg.shuffle_hyperedges_flag = true;
  else if (args.ablation == "ehr-only") cfg.random_node_init = true;
  else if (args.ablation == "shuffle-link") cfg.shuffle_link_embeddings = true;
  else if (!args.ablation.empty()) {
    throw std::runtime_error("unknown ablation: " + args.ablation);
  }

  const std::vector<hypkg::MetricReport> reports = hypkg::run_pipeline(cfg);
  std::cout << hypkg::summary_json(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HypKG: contextualized knowledge-graph representations from "
               "visit-level context hypergraphs"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Generate a synthetic clustered dataset");
  s->add_option("--out", synth.out_dir, "Output directory");
  s->add_option("--clusters", synth.clusters, "Number of clusters");
  s->add_option("--attrs", synth.attrs, "Attributes per cluster");
  s->add_option("--visits", synth.visits, "Number of visits");
  s->add_option("--noise", synth.noise, "Out-of-cluster attribute rate");
  s->add_option("--seed", synth.seed, "Random seed");

  LinkArgs link;
  CLI::App* l = app.add_subcommand("link", "Link EHR attributes to KG entities");
  l->add_option("--kg", link.kg_path, "Triple TSV")->required();
  l->add_option("--ehr", link.ehr_path, "EHR JSONL")->required();
  l->add_option("--out", link.out_path, "Output link CSV");
  l->add_option("--lm-embeddings", link.lm_embeddings, "Name-keyed embedding file");
  l->add_option("--synonyms", link.synonyms, "Synonym TSV (name<TAB>canonical)");
  l->add_option("--adjudicator", link.adjudicator, "argmax | replay");
  l->add_option("--replay", link.replay, "Replay decisions CSV");
  l->add_option("--lc", link.lc, "Candidate list size");
  l->add_flag("--shuffle-embeddings", link.shuffle, "Shuffled-provider ablation");
  l->add_option("--seed", link.seed, "Random seed");

  EmbedArgs embed;
  CLI::App* e = app.add_subcommand("embed", "Train KG embeddings or fuse external tables");
  e->add_option("--kg", embed.kg_path, "Triple TSV");
  e->add_option("--links", embed.links_path, "Link CSV (anchors for subsampling)");
  e->add_option("--out", embed.out_path, "Output embedding file");
  e->add_option("--subsampled-out", embed.subsampled_out, "Write the subsampled KG here");
  e->add_option("--external", embed.external, "Fusion mode: external embedding files")
      ->delimiter(',');
  e->add_option("--model", embed.model, "complex | transe");
  e->add_option("--scope", embed.scope, "one-hop | linked");
  e->add_option("--k", embed.k, "Top-K triples per entity");
  e->add_option("--dim", embed.dim, "Embedding dimension");
  e->add_option("--epochs", embed.epochs, "Training epochs");
  e->add_option("--lr", embed.lr, "Learning rate");
  e->add_option("--negatives", embed.negatives, "Negatives per positive");
  e->add_option("--batch", embed.batch, "Batch size");
  e->add_option("--seed", embed.seed, "Random seed");

  BuildArgs build;
  CLI::App* b = app.add_subcommand("build", "Build the context hypergraph");
  b->add_option("--ehr", build.ehr_path, "EHR JSONL")->required();
  b->add_option("--links", build.links_path, "Link CSV")->required();
  b->add_option("--out", build.out_path, "Output hypergraph JSONL");
  b->add_flag("--shuffle", build.shuffle, "Shuffle hyperedges (kg-only ablation)");
  b->add_option("--seed", build.seed, "Random seed");

  TrainArgs train;
  CLI::App* t = app.add_subcommand("train", "Train the hypergraph transformer");
  t->add_option("--ehr", train.ehr_path, "EHR JSONL")->required();
  t->add_option("--links", train.links_path, "Link CSV")->required();
  t->add_option("--embeddings", train.embeddings_path, "KG embedding file")->required();
  t->add_option("--out", train.out_dir, "Output directory");
  t->add_option("--layers", train.layers, "Message-passing layers");
  t->add_option("--hidden-dim", train.hidden_dim, "Hidden width");
  t->add_option("--heads", train.heads, "Attention heads");
  t->add_option("--final-dim", train.final_dim, "Prediction head width");
  t->add_flag("--residual", train.residual, "Add skip connections around pools");
  t->add_option("--lr", train.lr, "Learning rate");
  t->add_option("--weight-decay", train.weight_decay, "Weight decay");
  t->add_option("--epochs", train.epochs, "Training epochs");
  t->add_option("--eval-every", train.eval_every, "Validation cadence");
  t->add_option("--train-ratio", train.train_ratio, "Training fraction");
  t->add_option("--val-ratio", train.val_ratio, "Validation fraction");
  t->add_option("--test-ratio", train.test_ratio, "Test fraction");
  t->add_flag("--shuffle-edges", train.shuffle_edges, "kg-only ablation");
  t->add_flag("--random-init", train.random_init, "ehr-only ablation");
  t->add_option("--seed", train.seed, "Random seed");

  EvalArgs eval;
  CLI::App* v = app.add_subcommand("eval", "Score predictions against labels");
  v->add_option("--pred", eval.pred_path, "Predictions CSV")->required();
  v->add_option("--labels", eval.labels_path, "Labels CSV")->required();
  v->add_option("--out", eval.out_path, "Write the report here");
  v->add_option("--threshold", eval.threshold, "Decision threshold");

  AnalyzeArgs analyze;
  CLI::App* a = app.add_subcommand("analyze", "Similarity-delta case study");
  a->add_option("--ehr", analyze.ehr_path, "EHR JSONL")->required();
  a->add_option("--links", analyze.links_path, "Link CSV")->required();
  a->add_option("--before", analyze.before_path, "Pre-training embeddings")->required();
  a->add_option("--after", analyze.after_path, "Post-training embeddings")->required();
  a->add_option("--out", analyze.out_dir, "Output directory");
  a->add_option("--max-pairs", analyze.max_pairs, "Pair cap");

  RunArgs run;
  CLI::App* r = app.add_subcommand("run", "Full pipeline with seeded repeats");
  r->add_option("--config", run.config_path, "Sectioned key=value config file");
  r->add_option("--out", run.out_dir, "Output directory override");
  r->add_option("--kg", run.kg_path, "Triple TSV override");
  r->add_option("--ehr", run.ehr_path, "EHR JSONL override");
  r->add_option("--seed", run.seed, "Base seed override");
  r->add_option("--repeats", run.repeats, "Number of seeded repeats");
  r->add_option("--lc", run.lc, "Candidate list size override");
  r->add_option("--epochs", run.epochs, "Training epochs override");
  r->add_option("--lr", run.lr, "Learning rate override");
  r->add_option("--ablation", run.ablation, "kg-only | ehr-only | shuffle-link");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;  // nonzero parse failures are usage errors
  }

  std::string stage = "cli";
  try {
    if (s->parsed()) { stage = "synth"; return cmd_synth(synth); }
    if (l->parsed()) { stage = "link"; return cmd_link(link); }
    if (e->parsed()) { stage = "embed"; return cmd_embed(embed); }
    if (b->parsed()) { stage = "build"; return cmd_build(build); }
    if (t->parsed()) { stage = "train"; return cmd_train(train); }
    if (v->parsed()) { stage = "eval"; return cmd_eval(eval); }
    if (a->parsed()) { stage = "analyze"; return cmd_analyze(analyze); }
    if (r->parsed()) { stage = "run"; return cmd_run(run); }
  } catch (const hypkg::StageError& err) {
    print_error(err.stage(), err.what());
    return 1;
  } catch (const std::exception& err) {
    print_error(stage, err.what());
    return 1;
  }
  return 0;
}
