#include "genrank/gen_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace genrank {

RankedList decode_atomic(const VectorXf& h, const EmbeddingMatrix& w, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  VectorXf scores = score_all(h, w);
  VectorXd probs = softmax_probs(scores);
  RankedList ranked = flat_search(h, w, k);
  // Same ordering as flat_search; report probabilities instead of dots.
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < w.size(); ++i) index[w.ids[i]] = i;
  for (auto& entry : ranked) entry.score = static_cast<float>(probs(index[entry.doc_id]));
  return ranked;
}

namespace {

struct BeamItem {
  int node_id;
  double cum_logprob;
};

struct Expansion {
  int node_id;
  float logit;
  double cum_logprob;
  bool leaf;
};

double log_sum_exp(const std::vector<float>& logits) {
  double max_l = -std::numeric_limits<double>::infinity();
  for (float l : logits) max_l = std::max(max_l, static_cast<double>(l));
  double sum = 0.0;
  for (float l : logits) sum += std::exp(static_cast<double>(l) - max_l);
  return max_l + std::log(sum);
}

}  // namespace

BeamResult decode_beam(const VectorXf& h, const SemanticTree& tree, const EmbeddingMatrix& w,
                       const BeamConfig& config, int k) {
  if (config.width < 1) throw ArgumentError("beam width must be >= 1");
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (h.size() != tree.dim || tree.dim != w.dim)
    throw ArgumentError("query/tree/matrix dimension mismatch");

  BeamResult res;
  std::vector<DecodedPath> completed;
  std::vector<BeamItem> frontier = {{0, 0.0}};

  while (!frontier.empty()) {
    std::vector<Expansion> expansions;
    for (const BeamItem& item : frontier) {
      const TreeNode& parent = tree.nodes[item.node_id];
      std::vector<float> logits;
      logits.reserve(parent.children.size());
      for (int child_id : parent.children) {
        const TreeNode& child = tree.nodes[child_id];
        if (child.leaf && (child.doc_index < 0 || child.doc_index >= w.size()))
          throw ArgumentError("tree leaf doc index out of range");
        logits.push_back(child.leaf ? doc_score(w, child.doc_index, h) : child.centroid.dot(h));
      }
      double lse = log_sum_exp(logits);
      for (std::size_t i = 0; i < parent.children.size(); ++i) {
        const TreeNode& child = tree.nodes[parent.children[i]];
        double logprob = static_cast<double>(logits[i]) - lse;
        expansions.push_back({child.id, logits[i], item.cum_logprob + logprob, child.leaf});
      }
    }
    if (expansions.empty()) break;

    // A path reaching a leaf is complete: it leaves the beam for the result
    // pool. Only open (internal) paths compete for the B beam slots.
    std::vector<int> selected;
    std::vector<Expansion> open;
    for (const auto& e : expansions) {
      if (e.leaf) {
        const TreeNode& node = tree.nodes[e.node_id];
        DecodedPath dp;
        dp.path = tree.path_to(e.node_id);
        dp.doc_id = w.ids[node.doc_index];
        dp.cumulative_logprob = e.cum_logprob;
        dp.leaf_dot = e.logit;
        completed.push_back(std::move(dp));
        selected.push_back(e.node_id);
      } else {
        open.push_back(e);
      }
    }
    if (config.prune_by == PruneBy::StepLogit) {
      std::sort(open.begin(), open.end(), [](const Expansion& a, const Expansion& b) {
        if (a.logit != b.logit) return a.logit > b.logit;
        return a.node_id < b.node_id;
      });
    } else {
      std::sort(open.begin(), open.end(), [](const Expansion& a, const Expansion& b) {
        if (a.cum_logprob != b.cum_logprob) return a.cum_logprob > b.cum_logprob;
        return a.node_id < b.node_id;
      });
    }
    if (static_cast<int>(open.size()) > config.width) open.resize(config.width);

    frontier.clear();
    for (const auto& e : open) {
      selected.push_back(e.node_id);
      frontier.push_back({e.node_id, e.cum_logprob});
    }
    if (selected.empty()) break;
    std::sort(selected.begin(), selected.end());
    std::sort(frontier.begin(), frontier.end(),
              [](const BeamItem& a, const BeamItem& b) { return a.node_id < b.node_id; });
    res.visited.push_back(std::move(selected));
  }

  // Rank completed leaves; doc position in the id list breaks ties so the
  // ordering matches the dense-index rule.
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < w.size(); ++i) index[w.ids[i]] = i;
  if (config.rank_by == RankBy::LeafDot) {
    std::sort(completed.begin(), completed.end(), [&](const DecodedPath& a, const DecodedPath& b) {
      if (a.leaf_dot != b.leaf_dot) return a.leaf_dot > b.leaf_dot;
      return index[a.doc_id] < index[b.doc_id];
    });
  } else {
    std::sort(completed.begin(), completed.end(), [&](const DecodedPath& a, const DecodedPath& b) {
      if (a.cumulative_logprob != b.cumulative_logprob)
        return a.cumulative_logprob > b.cumulative_logprob;
      return index[a.doc_id] < index[b.doc_id];
    });
  }
  if (static_cast<int>(completed.size()) > k) completed.resize(k);
  res.paths = std::move(completed);
  return res;
}

std::map<std::string, double> enumerate_leaf_probs(const VectorXf& h, const SemanticTree& tree,
                                                   const EmbeddingMatrix& w) {
  if (h.size() != tree.dim || tree.dim != w.dim)
    throw ArgumentError("query/tree/matrix dimension mismatch");
  std::map<std::string, double> probs;
  // DFS with accumulated log-probability.
  std::vector<std::pair<int, double>> stack = {{0, 0.0}};
  while (!stack.empty()) {
    auto [node_id, cum] = stack.back();
    stack.pop_back();
    const TreeNode& node = tree.nodes[node_id];
    if (node.leaf) {
      if (node.doc_index < 0 || node.doc_index >= w.size())
        throw ArgumentError("tree leaf doc index out of range");
      probs[w.ids[node.doc_index]] = std::exp(cum);
      continue;
    }
    std::vector<float> logits;
    logits.reserve(node.children.size());
    for (int child_id : node.children) {
      const TreeNode& child = tree.nodes[child_id];
      logits.push_back(child.leaf ? doc_score(w, child.doc_index, h) : child.centroid.dot(h));
    }
    double lse = log_sum_exp(logits);
    for (std::size_t i = 0; i < node.children.size(); ++i)
      stack.push_back({node.children[i], cum + static_cast<double>(logits[i]) - lse});
  }
  return probs;
}

}  // namespace genrank
