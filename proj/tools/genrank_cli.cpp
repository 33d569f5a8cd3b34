#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>

#include "genrank/bm25.hpp"
#include "genrank/corpus_io.hpp"
#include "genrank/dense_index.hpp"
#include "genrank/encoder.hpp"
#include "genrank/eval.hpp"
#include "genrank/gen_decoder.hpp"
#include "genrank/semantic_tree.hpp"
#include "genrank/trainer.hpp"
#include "genrank/verify.hpp"

namespace {

using namespace genrank;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GENRANK_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

EncoderParams params_for(const std::string& params_path, int feature_dim, int dim,
                         bool normalize, std::uint64_t seed) {
  if (!params_path.empty()) return load_params(params_path);
  return default_params(feature_dim, dim, seed, normalize);
}

std::map<std::string, std::vector<std::string>> load_negatives(const std::string& path) {
  std::map<std::string, std::vector<std::string>> negs;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, docid, rank, score;
    if (!std::getline(ss, qid, '\t') || !std::getline(ss, docid, '\t'))
      throw FormatError("negatives line " + std::to_string(line_no) + ": expected TSV columns");
    negs[qid].push_back(docid);
  }
  return negs;
}

std::map<std::string, std::map<std::string, double>> load_margins(const std::string& path) {
  std::map<std::string, std::map<std::string, double>> margins;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, docid, value;
    if (!std::getline(ss, qid, '\t') || !std::getline(ss, docid, '\t') ||
        !std::getline(ss, value, '\t'))
      throw FormatError("margins line " + std::to_string(line_no) + ": expected 3 TSV columns");
    margins[qid][docid] = std::stod(value);
  }
  return margins;
}

RunFile ranked_to_run(const std::vector<std::pair<std::string, RankedList>>& per_query,
                      const std::string& tag) {
  RunFile run;
  run.tag = tag;
  for (const auto& [qid, ranked] : per_query) {
    std::vector<RunEntry> entries;
    for (std::size_t i = 0; i < ranked.size(); ++i)
      entries.push_back({ranked[i].doc_id, static_cast<int>(i) + 1, ranked[i].score});
    run.queries.emplace_back(qid, std::move(entries));
  }
  return run;
}

int run_main(int argc, char** argv) {
  CLI::App app{"generative/dense retrieval toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = default_seed();
  app.add_option("--seed", seed, "global random seed");

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "encode a corpus or query file to embeddings");
  std::string enc_corpus, enc_queries, enc_out, enc_params;
  int enc_feature_dim = 4096, enc_dim = 64;
  bool enc_normalize = false;
  encode_cmd->add_option("--corpus", enc_corpus, "corpus JSONL");
  encode_cmd->add_option("--queries", enc_queries, "queries TSV");
  encode_cmd->add_option("--out", enc_out, "output embeddings file")->required();
  encode_cmd->add_option("--params", enc_params, "trained encoder parameters");
  encode_cmd->add_option("--feature-dim", enc_feature_dim, "hashing buckets F");
  encode_cmd->add_option("--dim", enc_dim, "embedding dim d");
  encode_cmd->add_flag("--normalize", enc_normalize, "L2-normalize outputs");

  // build-tree
  auto* tree_cmd = app.add_subcommand("build-tree", "build a semantic DocID tree");
  std::string tree_embeddings, tree_out;
  int tree_c = 8;
  tree_cmd->add_option("--embeddings", tree_embeddings, "document embeddings")->required();
  tree_cmd->add_option("--out", tree_out, "output tree JSON")->required();
  tree_cmd->add_option("--c", tree_c, "branching factor");

  // search
  auto* search_cmd = app.add_subcommand("search", "retrieve and write a TREC run");
  std::string s_mode, s_embeddings, s_queries, s_params, s_tree, s_out, s_tag;
  std::string s_prune = "cumulative_logprob", s_rank = "cumulative_logprob";
  int s_k = 10, s_nprobe = 1, s_beam = 1, s_feature_dim = 4096;
  search_cmd->add_option("--mode", s_mode, "flat | tree | atomic | beam")
      ->required()
      ->check(CLI::IsMember({"flat", "tree", "atomic", "beam"}));
  search_cmd->add_option("--embeddings", s_embeddings, "document embeddings")->required();
  search_cmd->add_option("--queries", s_queries, "queries TSV")->required();
  search_cmd->add_option("--params", s_params, "encoder parameters for queries");
  search_cmd->add_option("--tree", s_tree, "tree JSON (tree/beam modes)");
  search_cmd->add_option("--out", s_out, "output run file")->required();
  search_cmd->add_option("--tag", s_tag, "run tag (default: mode)");
  search_cmd->add_option("--k", s_k, "results per query");
  search_cmd->add_option("--nprobe", s_nprobe, "branches explored per level");
  search_cmd->add_option("--beam-width", s_beam, "beam width");
  search_cmd->add_option("--feature-dim", s_feature_dim, "hashing buckets F");
  search_cmd->add_option("--prune-by", s_prune, "cumulative_logprob | step_logit")
      ->check(CLI::IsMember({"cumulative_logprob", "step_logit"}));
  search_cmd->add_option("--rank-by", s_rank, "cumulative_logprob | leaf_dot")
      ->check(CLI::IsMember({"cumulative_logprob", "leaf_dot"}));

  // train
  auto* train_cmd = app.add_subcommand("train", "train encoder parameters");
  std::string t_corpus, t_queries, t_qrels, t_negatives, t_margins, t_out, t_table_out,
      t_loss_log;
  std::string t_mode = "tied-contrastive";
  int t_steps = 2000, t_batch = 32, t_npq = 4, t_feature_dim = 4096, t_dim = 64;
  double t_lr = 0.1, t_tau = 1.0, t_ratio = 0.5;
  bool t_normalize = false;
  train_cmd->add_option("--corpus", t_corpus, "corpus JSONL")->required();
  train_cmd->add_option("--queries", t_queries, "queries TSV")->required();
  train_cmd->add_option("--qrels", t_qrels, "qrels with positive pairs")->required();
  train_cmd->add_option("--negatives", t_negatives, "mined negatives TSV");
  train_cmd->add_option("--margins", t_margins, "teacher margins TSV (tied-marginmse)");
  train_cmd->add_option("--out", t_out, "output parameter file")->required();
  train_cmd->add_option("--table-out", t_table_out, "free-dsi table as embeddings file");
  train_cmd->add_option("--loss-log", t_loss_log, "per-step loss TSV (default stdout)");
  train_cmd->add_option("--mode", t_mode, "tied-contrastive | tied-marginmse | free-dsi")
      ->check(CLI::IsMember({"tied-contrastive", "tied-marginmse", "free-dsi"}));
  train_cmd->add_option("--steps", t_steps, "gradient steps");
  train_cmd->add_option("--batch-size", t_batch, "batch size");
  train_cmd->add_option("--lr", t_lr, "learning rate");
  train_cmd->add_option("--tau", t_tau, "contrastive temperature");
  train_cmd->add_option("--negatives-per-query", t_npq, "BM25 negatives per query");
  train_cmd->add_option("--multitask-ratio", t_ratio, "indexing-task fraction (free-dsi)");
  train_cmd->add_option("--feature-dim", t_feature_dim, "hashing buckets F");
  train_cmd->add_option("--dim", t_dim, "embedding dim d");
  train_cmd->add_flag("--normalize", t_normalize, "L2-normalize encoder outputs");

  // mine-negatives
  auto* mine_cmd = app.add_subcommand("mine-negatives", "mine BM25 hard negatives");
  std::string m_corpus, m_queries, m_qrels, m_out, m_preset = "default";
  int m_top_k = 100, m_per_query = 10;
  mine_cmd->add_option("--corpus", m_corpus, "corpus JSONL")->required();
  mine_cmd->add_option("--queries", m_queries, "queries TSV")->required();
  mine_cmd->add_option("--qrels", m_qrels, "qrels")->required();
  mine_cmd->add_option("--out", m_out, "output TSV")->required();
  mine_cmd->add_option("--top-k", m_top_k, "candidate pool size");
  mine_cmd->add_option("--per-query", m_per_query, "negatives kept per query");
  mine_cmd->add_option("--preset", m_preset, "default | tuned")
      ->check(CLI::IsMember({"default", "tuned"}));

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a run against qrels");
  std::string e_run, e_qrels, e_metric = "recall";
  int e_k = 10;
  bool e_per_query = false;
  eval_cmd->add_option("--run", e_run, "run file")->required();
  eval_cmd->add_option("--qrels", e_qrels, "qrels")->required();
  eval_cmd->add_option("--metric", e_metric, "recall | mrr")
      ->check(CLI::IsMember({"recall", "mrr"}));
  eval_cmd->add_option("--k", e_k, "cutoff");
  eval_cmd->add_flag("--per-query", e_per_query, "dump per-query values");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the cross-paradigm invariant suite");

  for (CLI::App* sub : app.get_subcommands(/*filter=*/[](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  if (encode_cmd->parsed()) {
    if (enc_corpus.empty() == enc_queries.empty())
      throw ArgumentError("encode needs exactly one of --corpus / --queries");
    EncoderParams params = params_for(enc_params, enc_feature_dim, enc_dim, enc_normalize, seed);
    EmbeddingMatrix m = enc_corpus.empty()
                            ? encode_queries(params, load_queries(enc_queries))
                            : encode_corpus(params, load_corpus(enc_corpus));
    save_embeddings(m, enc_out);
    std::cout << "encoded " << m.size() << " vectors (dim " << m.dim << ") -> " << enc_out
              << '\n';
    return 0;
  }

  if (tree_cmd->parsed()) {
    EmbeddingMatrix m = load_embeddings(tree_embeddings);
    SemanticTree tree = build_tree(m, tree_c, seed);
    auto violations = validate_tree(tree, m);
    if (!violations.empty()) throw std::runtime_error("built tree invalid: " + violations[0]);
    save_tree(tree, tree_out);
    std::cout << "tree with " << tree.nodes.size() << " nodes -> " << tree_out << '\n';
    return 0;
  }

  if (search_cmd->parsed()) {
    EmbeddingMatrix docs = load_embeddings(s_embeddings);
    std::vector<Query> queries = load_queries(s_queries);
    EncoderParams params = params_for(s_params, s_feature_dim, docs.dim, false, seed);
    if (params.output_dim() != docs.dim)
      throw ArgumentError("encoder output dim does not match document embeddings");
    SemanticTree tree;
    if (s_mode == "tree" || s_mode == "beam") {
      if (s_tree.empty()) throw ArgumentError("--tree is required for tree/beam modes");
      tree = load_tree(s_tree);
    }
    std::string tag = s_tag.empty() ? s_mode : s_tag;
    std::vector<std::pair<std::string, RankedList>> results;
    for (const Query& q : queries) {
      VectorXf h =
          encode(params, featurize(q.text, params.feature_dim())).cast<float>();
      RankedList ranked;
      if (s_mode == "flat") {
        ranked = flat_search(h, docs, s_k);
      } else if (s_mode == "tree") {
        ranked = tree_search(h, tree, docs, s_nprobe, s_k).ranked;
      } else if (s_mode == "atomic") {
        // Ordering from the atomic decoder; scores written as dot products
        // so flat and atomic runs agree byte-for-byte.
        ranked = decode_atomic(h, docs, s_k);
        std::unordered_map<std::string, int> index;
        for (int i = 0; i < docs.size(); ++i) index[docs.ids[i]] = i;
        for (auto& entry : ranked) entry.score = doc_score(docs, index[entry.doc_id], h);
      } else {
        BeamConfig cfg;
        cfg.width = s_beam;
        cfg.prune_by =
            s_prune == "step_logit" ? PruneBy::StepLogit : PruneBy::CumulativeLogprob;
        cfg.rank_by = s_rank == "leaf_dot" ? RankBy::LeafDot : RankBy::CumulativeLogprob;
        auto beam = decode_beam(h, tree, docs, cfg, s_k);
        for (const auto& path : beam.paths)
          ranked.push_back({path.doc_id, cfg.rank_by == RankBy::LeafDot
                                             ? path.leaf_dot
                                             : static_cast<float>(path.cumulative_logprob)});
      }
      results.emplace_back(q.query_id, std::move(ranked));
    }
    write_run(ranked_to_run(results, tag), s_out);
    std::cout << "wrote run for " << results.size() << " queries -> " << s_out << '\n';
    return 0;
  }

  if (train_cmd->parsed()) {
    std::vector<Document> corpus = load_corpus(t_corpus);
    std::vector<Query> queries = load_queries(t_queries);
    Qrels qrels = load_qrels(t_qrels);
    std::vector<TrainPair> pairs;
    for (const auto& [qid, judged] : qrels)
      for (const auto& [docid, grade] : judged)
        if (grade > 0) pairs.push_back({qid, docid});
    std::map<std::string, std::vector<std::string>> negatives;
    if (!t_negatives.empty()) negatives = load_negatives(t_negatives);
    std::map<std::string, std::map<std::string, double>> margins;
    if (!t_margins.empty()) margins = load_margins(t_margins);

    TrainConfig config;
    config.mode = t_mode == "tied-contrastive" ? TrainMode::TiedContrastive
                  : t_mode == "tied-marginmse" ? TrainMode::TiedMarginMse
                                               : TrainMode::FreeDsi;
    config.learning_rate = t_lr;
    config.steps = t_steps;
    config.batch_size = t_batch;
    config.negatives_per_query = t_npq;
    config.temperature = t_tau;
    config.multitask_ratio = t_ratio;
    config.seed = seed;

    EncoderParams init = default_params(t_feature_dim, t_dim, seed, t_normalize);
    TrainResult result = train(corpus, queries, pairs, negatives, margins, init, config);
    save_params(result.params, t_out);
    if (result.table && !t_table_out.empty()) {
      EmbeddingMatrix table;
      table.dim = t_dim;
      table.ids = result.table->ids;
      table.rows = result.table->rows.cast<float>();
      save_embeddings(table, t_table_out);
    }
    std::ofstream log_file;
    std::ostream* log = &std::cout;
    if (!t_loss_log.empty()) {
      log_file.open(t_loss_log);
      if (!log_file) throw FormatError("cannot open file for writing: " + t_loss_log);
      log = &log_file;
    }
    for (std::size_t i = 0; i < result.loss_log.size(); ++i)
      (*log) << i << '\t' << result.loss_log[i] << '\n';
    std::cout << "trained " << t_steps << " steps -> " << t_out << '\n';
    return 0;
  }

  if (mine_cmd->parsed()) {
    std::vector<Document> corpus = load_corpus(m_corpus);
    std::vector<Query> queries = load_queries(m_queries);
    Qrels qrels = load_qrels(m_qrels);
    Bm25Params params = m_preset == "tuned" ? bm25_tuned_preset() : Bm25Params{};
    Bm25Index index = build_bm25(corpus, params);
    MinedNegatives mined = mine_negatives(index, queries, qrels, m_top_k, m_per_query);
    for (const auto& qid : mined.skipped_queries)
      std::cerr << "warning: query " << qid << " absent from qrels, skipped\n";
    std::ofstream out(m_out);
    if (!out) throw FormatError("cannot open file for writing: " + m_out);
    for (const auto& q : queries) {
      auto it = mined.negatives.find(q.query_id);
      if (it == mined.negatives.end()) continue;
      RankedList hits = it->second.empty() ? RankedList{} : bm25_search(index, q.text, m_top_k);
      std::unordered_map<std::string, std::pair<int, float>> rank_of;
      for (std::size_t i = 0; i < hits.size(); ++i)
        rank_of[hits[i].doc_id] = {static_cast<int>(i) + 1, hits[i].score};
      for (const auto& docid : it->second) {
        auto [rank, score] = rank_of.at(docid);
        out << q.query_id << '\t' << docid << '\t' << rank << '\t' << format_score(score)
            << '\n';
      }
    }
    std::cout << "mined negatives for " << mined.negatives.size() << " queries -> " << m_out
              << '\n';
    return 0;
  }

  if (eval_cmd->parsed()) {
    RunFile run = load_run(e_run);
    Qrels qrels = load_qrels(e_qrels);
    MetricReport report =
        e_metric == "recall" ? recall_at_k(run, qrels, e_k) : mrr_at_k(run, qrels, e_k);
    std::cout << report.metric << '\t' << report.k << '\t' << report.mean << '\t'
              << report.n_queries << '\n';
    if (e_per_query)
      for (const auto& [qid, value] : report.per_query)
        std::cout << qid << '\t' << value << '\n';
    return 0;
  }

  if (verify_cmd->parsed()) {
    bool all_ok = true;
    for (const CheckResult& check : run_verification(seed)) {
      std::cout << (check.passed ? "PASS" : "FAIL") << '\t' << check.name;
      if (!check.passed) std::cout << '\t' << check.detail;
      std::cout << '\n';
      all_ok &= check.passed;
    }
    return all_ok ? 0 : 1;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const genrank::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const genrank::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
