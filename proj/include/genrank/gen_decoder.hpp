#pragma once

#include <map>
#include <string>
#include <vector>

#include "genrank/dense_index.hpp"
#include "genrank/semantic_tree.hpp"
#include "genrank/types.hpp"

namespace genrank {

enum class PruneBy { CumulativeLogprob, StepLogit };
enum class RankBy { CumulativeLogprob, LeafDot };

struct BeamConfig {
  int width = 1;
  PruneBy prune_by = PruneBy::CumulativeLogprob;
  RankBy rank_by = RankBy::CumulativeLogprob;
};

struct DecodedPath {
  std::vector<int> path;  // root-to-leaf labels
  std::string doc_id;
  double cumulative_logprob = 0.0;
  float leaf_dot = 0.0f;
};

struct BeamResult {
  std::vector<DecodedPath> paths;
  VisitedLevels visited;
};

/// Single decoding step over the atomic DocID vocabulary: softmax over
/// per-document dot products. The returned ordering is identical to
/// flat_search; scores are generation probabilities.
RankedList decode_atomic(const VectorXf& h, const EmbeddingMatrix& w, int k);

/// Stepwise beam decode over the cluster trie. Per-step logits are dots of
/// h with child embeddings (centroid for internal children, document vector
/// for leaves); log-probabilities are per-parent log-softmaxes. h is held
/// fixed across steps.
BeamResult decode_beam(const VectorXf& h, const SemanticTree& tree, const EmbeddingMatrix& w,
                       const BeamConfig& config, int k);

/// Full enumeration of DocID generation probabilities: the product of
/// per-step softmax probabilities along each root-to-leaf path.
std::map<std::string, double> enumerate_leaf_probs(const VectorXf& h, const SemanticTree& tree,
                                                   const EmbeddingMatrix& w);

}  // namespace genrank
