#include "genrank/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "genrank/bm25.hpp"
#include "genrank/encoder.hpp"
#include "genrank/dense_index.hpp"
#include "genrank/gen_decoder.hpp"
#include "genrank/semantic_tree.hpp"
#include "genrank/synthetic.hpp"
#include "genrank/trainer.hpp"
#include "genrank/types.hpp"

namespace genrank {

namespace {

bool same_ranking(const RankedList& a, const RankedList& b, std::string* detail) {
  if (a.size() != b.size()) {
    *detail = "ranking sizes differ";
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].doc_id != b[i].doc_id) {
      *detail = "doc mismatch at rank " + std::to_string(i + 1) + ": " + a[i].doc_id + " vs " +
                b[i].doc_id;
      return false;
    }
  return true;
}

CheckResult check_atomic_equals_flat(std::uint64_t seed) {
  CheckResult res{"atomic-decode equals flat-search", true, ""};
  for (int trial = 0; trial < 50 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed + trial);
    std::mt19937_64 rng(s);
    int n = 2 + static_cast<int>(rng() % 200);
    int d = 2 + static_cast<int>(rng() % 16);
    EmbeddingMatrix w = random_matrix(n, d, s);
    VectorXf h = random_vector(d, splitmix64(s));
    for (int k : {1, 10, n}) {
      RankedList flat = flat_search(h, w, k);
      RankedList atomic = decode_atomic(h, w, k);
      if (!same_ranking(flat, atomic, &res.detail)) {
        res.passed = false;
        res.detail = "trial " + std::to_string(trial) + ": " + res.detail;
        break;
      }
    }
  }
  return res;
}

CheckResult check_greedy_correspondence(std::uint64_t seed) {
  CheckResult res{"greedy beam visits tree-search(nprobe=1) nodes", true, ""};
  for (int trial = 0; trial < 50 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed * 31 + trial);
    std::mt19937_64 rng(s);
    int n = 4 + static_cast<int>(rng() % 120);
    int d = 2 + static_cast<int>(rng() % 10);
    int c = 2 << (rng() % 3);
    EmbeddingMatrix w = random_matrix(n, d, s);
    SemanticTree tree = build_tree(w, c, s);
    VectorXf h = random_vector(d, splitmix64(s + 1));
    auto ts = tree_search(h, tree, w, 1, 1);
    BeamConfig cfg{1, PruneBy::CumulativeLogprob, RankBy::CumulativeLogprob};
    auto beam = decode_beam(h, tree, w, cfg, 1);
    if (ts.visited != beam.visited) {
      res.passed = false;
      res.detail = "trial " + std::to_string(trial) + ": visited sets differ";
    } else if (!ts.ranked.empty() && !beam.paths.empty() &&
               ts.ranked[0].doc_id != beam.paths[0].doc_id) {
      res.passed = false;
      res.detail = "trial " + std::to_string(trial) + ": leaves differ";
    }
  }
  return res;
}

CheckResult check_dense_equivalent_beam(std::uint64_t seed) {
  CheckResult res{"dense-equivalent beam equals tree-search / flat-search", true, ""};
  for (int trial = 0; trial < 50 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed * 77 + trial);
    std::mt19937_64 rng(s);
    int n = 4 + static_cast<int>(rng() % 120);
    int d = 2 + static_cast<int>(rng() % 10);
    int c = 2 << (rng() % 3);
    int k = 1 + static_cast<int>(rng() % 5);
    EmbeddingMatrix w = random_matrix(n, d, s);
    SemanticTree tree = build_tree(w, c, s);
    VectorXf h = random_vector(d, splitmix64(s + 1));
    for (int b : {1, 2, 4}) {
      auto ts = tree_search(h, tree, w, b, k);
      BeamConfig cfg{b, PruneBy::StepLogit, RankBy::LeafDot};
      auto beam = decode_beam(h, tree, w, cfg, k);
      if (ts.visited != beam.visited || ts.ranked.size() != beam.paths.size()) {
        res.passed = false;
        res.detail = "trial " + std::to_string(trial) + " B=" + std::to_string(b);
        break;
      }
      for (std::size_t i = 0; i < ts.ranked.size(); ++i)
        if (ts.ranked[i].doc_id != beam.paths[i].doc_id) {
          res.passed = false;
          res.detail = "trial " + std::to_string(trial) + " B=" + std::to_string(b);
          break;
        }
    }
    if (!res.passed) break;
    int wide = tree.max_level_width();
    BeamConfig cfg{wide, PruneBy::StepLogit, RankBy::LeafDot};
    auto beam = decode_beam(h, tree, w, cfg, k);
    RankedList flat = flat_search(h, w, k);
    if (beam.paths.size() != flat.size()) {
      res.passed = false;
      res.detail = "exhaustive beam size mismatch, trial " + std::to_string(trial);
    } else {
      for (std::size_t i = 0; i < flat.size(); ++i)
        if (flat[i].doc_id != beam.paths[i].doc_id) {
          res.passed = false;
          res.detail = "exhaustive beam mismatch, trial " + std::to_string(trial);
          break;
        }
    }
  }
  return res;
}

CheckResult check_leaf_prob_normalization(std::uint64_t seed) {
  CheckResult res{"leaf generation probabilities sum to 1", true, ""};
  for (int trial = 0; trial < 25 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed * 131 + trial);
    std::mt19937_64 rng(s);
    int n = 4 + static_cast<int>(rng() % 400);
    int d = 2 + static_cast<int>(rng() % 10);
    int c = 2 << (rng() % 3);
    EmbeddingMatrix w = random_matrix(n, d, s);
    SemanticTree tree = build_tree(w, c, s);
    VectorXf h = random_vector(d, splitmix64(s + 1));
    double sum = 0.0;
    for (const auto& [doc, p] : enumerate_leaf_probs(h, tree, w)) sum += p;
    if (std::abs(sum - 1.0) > 1e-6) {
      res.passed = false;
      res.detail = "trial " + std::to_string(trial) + ": sum " + std::to_string(sum);
    }
  }
  return res;
}

CheckResult check_gradients(std::uint64_t seed) {
  CheckResult res{"analytic gradients match finite differences", true, ""};
  const double step = 1e-4;
  auto rel_err = [](double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
  };
  for (int trial = 0; trial < 10 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed * 911 + trial);
    std::mt19937_64 rng(s);
    int d = 2 + static_cast<int>(rng() % 6);
    std::normal_distribution<double> dist(0.0, 1.0);
    auto rand_vec = [&] {
      VectorXd v(d);
      for (int j = 0; j < d; ++j) v(j) = dist(rng);
      return v;
    };
    // infonce
    VectorXd q = rand_vec(), pos = rand_vec();
    std::vector<VectorXd> negs;
    int n_negs = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n_negs; ++i) negs.push_back(rand_vec());
    auto g = infonce_loss(q, pos, negs, 1.0);
    for (int j = 0; j < d && res.passed; ++j) {
      VectorXd qp = q, qm = q;
      qp(j) += step;
      qm(j) -= step;
      double fd = (infonce_loss(qp, pos, negs, 1.0).loss -
                   infonce_loss(qm, pos, negs, 1.0).loss) /
                  (2 * step);
      if (rel_err(fd, g.dq(j)) > 1e-4) {
        res.passed = false;
        res.detail = "infonce dq mismatch, trial " + std::to_string(trial);
      }
    }
    // dsi_ce
    FreeEmbeddingTable table;
    int n_docs = 2 + static_cast<int>(rng() % 6);
    table.rows.resize(n_docs, d);
    for (int i = 0; i < n_docs; ++i) {
      table.ids.push_back("d" + std::to_string(i));
      for (int j = 0; j < d; ++j) table.rows(i, j) = dist(rng);
    }
    VectorXd h = rand_vec();
    int target = static_cast<int>(rng() % n_docs);
    auto dg = dsi_ce_loss(h, table, target);
    for (int j = 0; j < d && res.passed; ++j) {
      VectorXd hp = h, hm = h;
      hp(j) += step;
      hm(j) -= step;
      double fd = (dsi_ce_loss(hp, table, target).loss - dsi_ce_loss(hm, table, target).loss) /
                  (2 * step);
      if (rel_err(fd, dg.dh(j)) > 1e-4) {
        res.passed = false;
        res.detail = "dsi_ce dh mismatch, trial " + std::to_string(trial);
      }
    }
  }
  return res;
}

CheckResult check_bm25_brute_force(std::uint64_t seed) {
  CheckResult res{"BM25 search equals brute-force scalar scoring", true, ""};
  for (int trial = 0; trial < 10 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed * 501 + trial);
    SyntheticTask task = make_synthetic_task(60, 5, 0, s);
    for (const Bm25Params& params : {Bm25Params{}, bm25_tuned_preset()}) {
      Bm25Index index = build_bm25(task.docs, params);
      for (const Query& q : task.train_queries) {
        RankedList fast = bm25_search(index, q.text, static_cast<int>(task.docs.size()));
        // Scalar re-scoring of every document.
        std::vector<std::pair<double, int>> scored;
        auto terms = tokenize(q.text);
        for (int ord = 0; ord < index.doc_count; ++ord) {
          double score = 0.0;
          auto doc_terms = tokenize(document_text(task.docs[ord]));
          for (const auto& t : terms) {
            int tf = 0;
            for (const auto& dt : doc_terms) tf += dt == t ? 1 : 0;
            if (tf == 0) continue;
            auto it = index.postings.find(t);
            double df = static_cast<double>(it->second.size());
            double idf = std::log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5));
            double norm =
                params.k1 * (1.0 - params.b + params.b * index.doc_lengths[ord] / index.avgdl);
            score += idf * tf * (params.k1 + 1.0) / (tf + norm);
          }
          if (score > 0.0) scored.emplace_back(score, ord);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
        if (scored.size() != fast.size()) {
          res.passed = false;
          res.detail = "result size mismatch, trial " + std::to_string(trial);
          break;
        }
        for (std::size_t i = 0; i < scored.size(); ++i)
          if (index.doc_ids[scored[i].second] != fast[i].doc_id ||
              static_cast<float>(scored[i].first) != fast[i].score) {
            res.passed = false;
            res.detail = "score/order mismatch, trial " + std::to_string(trial);
            break;
          }
        if (!res.passed) break;
      }
      if (!res.passed) break;
    }
  }
  return res;
}

CheckResult check_tree_validity(std::uint64_t seed) {
  CheckResult res{"built trees validate cleanly", true, ""};
  for (int trial = 0; trial < 20 && res.passed; ++trial) {
    std::uint64_t s = splitmix64(seed * 733 + trial);
    std::mt19937_64 rng(s);
    int n = 1 + static_cast<int>(rng() % 300);
    int d = 2 + static_cast<int>(rng() % 10);
    int c = 2 << (rng() % 3);
    EmbeddingMatrix w = random_matrix(n, d, s);
    if (trial % 5 == 4)  // duplicate-embedding stress
      for (int i = 1; i < n; ++i) w.rows.row(i) = w.rows.row(0);
    SemanticTree tree = build_tree(w, c, s);
    auto violations = validate_tree(tree, w);
    if (!violations.empty()) {
      res.passed = false;
      res.detail = "trial " + std::to_string(trial) + ": " + violations.front();
    }
  }
  return res;
}

}  // namespace

std::vector<CheckResult> run_verification(std::uint64_t seed) {
  return {
      check_atomic_equals_flat(seed),       check_greedy_correspondence(seed),
      check_dense_equivalent_beam(seed),    check_leaf_prob_normalization(seed),
      check_gradients(seed),                check_bm25_brute_force(seed),
      check_tree_validity(seed),
  };
}

}  // namespace genrank
