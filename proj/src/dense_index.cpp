#include "genrank/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace genrank {

VectorXf score_all(const VectorXf& q, const EmbeddingMatrix& w) {
  if (q.size() != w.dim) throw ArgumentError("query/matrix dimension mismatch");
  VectorXf scores(w.size());
  for (int i = 0; i < w.size(); ++i) scores(i) = doc_score(w, i, q);
  return scores;
}

VectorXd softmax_probs(const VectorXf& scores) {
  if (scores.size() == 0) throw ArgumentError("softmax of empty score vector");
  double max_s = scores.maxCoeff();
  VectorXd p(scores.size());
  double sum = 0.0;
  for (int i = 0; i < scores.size(); ++i) {
    p(i) = std::exp(static_cast<double>(scores(i)) - max_s);
    sum += p(i);
  }
  p /= sum;
  return p;
}

namespace {

// Shared tie-break: higher score first, then ascending index.
std::vector<int> top_indices(const VectorXf& scores, int k) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  if (static_cast<int>(order.size()) > k) order.resize(k);
  return order;
}

}  // namespace

RankedList flat_search(const VectorXf& q, const EmbeddingMatrix& w, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  VectorXf scores = score_all(q, w);
  RankedList out;
  for (int i : top_indices(scores, k)) out.push_back({w.ids[i], scores(i)});
  return out;
}

TreeSearchResult tree_search(const VectorXf& q, const SemanticTree& tree,
                             const EmbeddingMatrix& w, int nprobe, int k) {
  if (nprobe < 1) throw ArgumentError("nprobe must be >= 1");
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (q.size() != tree.dim || tree.dim != w.dim)
    throw ArgumentError("query/tree/matrix dimension mismatch");

  struct Candidate {
    float score;
    int doc_index;
  };
  std::vector<Candidate> candidates;
  TreeSearchResult res;

  std::vector<int> frontier = {0};
  while (!frontier.empty()) {
    // Leaf children of explored nodes always become candidates; internal
    // children compete for the top-nprobe frontier slots of the next level.
    struct Expansion {
      int node_id;
      float score;
    };
    std::vector<Expansion> internal;
    std::vector<int> selected;
    for (int node_id : frontier) {
      for (int child_id : tree.nodes[node_id].children) {
        const TreeNode& child = tree.nodes[child_id];
        if (child.leaf) {
          if (child.doc_index < 0 || child.doc_index >= w.size())
            throw ArgumentError("tree leaf doc index out of range");
          candidates.push_back({doc_score(w, child.doc_index, q), child.doc_index});
          selected.push_back(child_id);
        } else {
          internal.push_back({child_id, child.centroid.dot(q)});
        }
      }
    }
    std::sort(internal.begin(), internal.end(), [](const Expansion& a, const Expansion& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.node_id < b.node_id;
    });
    if (static_cast<int>(internal.size()) > nprobe) internal.resize(nprobe);

    frontier.clear();
    for (const auto& e : internal) {
      selected.push_back(e.node_id);
      frontier.push_back(e.node_id);
    }
    if (selected.empty()) break;
    std::sort(selected.begin(), selected.end());
    std::sort(frontier.begin(), frontier.end());
    res.visited.push_back(std::move(selected));
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_index < b.doc_index;
  });
  if (static_cast<int>(candidates.size()) > k) candidates.resize(k);
  for (const auto& cand : candidates) res.ranked.push_back({w.ids[cand.doc_index], cand.score});
  return res;
}

}  // namespace genrank
