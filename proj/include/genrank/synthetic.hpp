#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "genrank/types.hpp"

namespace genrank {

inline EmbeddingMatrix random_matrix(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  EmbeddingMatrix m;
  m.dim = d;
  m.rows.resize(n, d);
  for (int i = 0; i < n; ++i) {
    m.ids.push_back("d" + std::to_string(i));
    for (int j = 0; j < d; ++j) m.rows(i, j) = dist(rng);
  }
  return m;
}

inline VectorXf random_vector(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  VectorXf v(d);
  for (int j = 0; j < d; ++j) v(j) = dist(rng);
  return v;
}

/// Random token-set corpus plus queries built as noisy token subsets of
/// their positive document.
struct SyntheticTask {
  std::vector<Document> docs;
  std::vector<Query> train_queries;
  std::vector<Query> heldout_queries;
  Qrels train_qrels;
  Qrels heldout_qrels;
};

/// Documents mix rare content tokens (which identify the document) with
/// common filler tokens drawn from a small shared pool, like stopwords.
/// Queries carry a content subset of their positive document plus filler
/// noise.
inline SyntheticTask make_synthetic_task(int n_docs, int n_train, int n_heldout,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int content_vocab = 4000;
  const int filler_vocab = 100;
  const int content_per_doc = 12;
  const int fillers_per_doc = 10;
  const int query_content = 4;
  const int query_fillers = 5;
  std::uniform_int_distribution<int> pick_content(0, content_vocab - 1);
  std::uniform_int_distribution<int> pick_filler(0, filler_vocab - 1);

  SyntheticTask task;
  std::vector<std::vector<int>> doc_content(n_docs);
  for (int i = 0; i < n_docs; ++i) {
    std::vector<int>& toks = doc_content[i];
    while (static_cast<int>(toks.size()) < content_per_doc) {
      int t = pick_content(rng);
      bool dup = false;
      for (int have : toks) dup |= have == t;
      if (!dup) toks.push_back(t);
    }
    std::string text;
    for (int t : toks) text += "w" + std::to_string(100000 + t) + " ";
    for (int j = 0; j < fillers_per_doc; ++j) text += "f" + std::to_string(pick_filler(rng)) + " ";
    task.docs.push_back({"doc" + std::to_string(i), std::nullopt, text});
  }

  auto make_query = [&](int qn, int target) {
    std::uniform_int_distribution<int> pick_pos(0, content_per_doc - 1);
    std::vector<int> toks;
    while (static_cast<int>(toks.size()) < query_content) {
      int t = doc_content[target][pick_pos(rng)];
      bool dup = false;
      for (int have : toks) dup |= have == t;
      if (!dup) toks.push_back(t);
    }
    std::string text;
    for (int t : toks) text += "w" + std::to_string(100000 + t) + " ";
    for (int j = 0; j < query_fillers; ++j) text += "f" + std::to_string(pick_filler(rng)) + " ";
    return Query{"q" + std::to_string(qn), text};
  };

  std::uniform_int_distribution<int> pick_doc(0, n_docs - 1);
  for (int i = 0; i < n_train; ++i) {
    int target = pick_doc(rng);
    task.train_queries.push_back(make_query(i, target));
    task.train_qrels["q" + std::to_string(i)]["doc" + std::to_string(target)] = 1;
  }
  for (int i = 0; i < n_heldout; ++i) {
    int qn = n_train + i;
    int target = pick_doc(rng);
    task.heldout_queries.push_back(make_query(qn, target));
    task.heldout_qrels["q" + std::to_string(qn)]["doc" + std::to_string(target)] = 1;
  }
  return task;
}

}  // namespace genrank
