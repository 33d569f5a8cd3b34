#pragma once

#include <vector>

#include "genrank/semantic_tree.hpp"
#include "genrank/types.hpp"

namespace genrank {

/// Node ids selected at each tree level, ascending within a level.
using VisitedLevels = std::vector<std::vector<int>>;

struct TreeSearchResult {
  RankedList ranked;
  VisitedLevels visited;
};

/// One dot product per document: result[i] = q . rows[i].
VectorXf score_all(const VectorXf& q, const EmbeddingMatrix& w);

/// Max-subtracted softmax; preserves the score ordering and tie-break.
VectorXd softmax_probs(const VectorXf& scores);

/// Exact top-k by inner product; ties by ascending id-list position.
RankedList flat_search(const VectorXf& q, const EmbeddingMatrix& w, int k);

/// Pruned search: per level, keep the top-nprobe children of the frontier
/// (internal children scored against their centroid, leaf children against
/// the document vector); selected leaves accumulate as candidates.
TreeSearchResult tree_search(const VectorXf& q, const SemanticTree& tree,
                             const EmbeddingMatrix& w, int nprobe, int k);

/// Shared per-document scoring expression; every retrieval path uses this
/// so cross-path rankings compare bit-equal floats.
inline float doc_score(const EmbeddingMatrix& w, int doc_index, const VectorXf& q) {
  return w.rows.row(doc_index).dot(q.transpose());
}

}  // namespace genrank
