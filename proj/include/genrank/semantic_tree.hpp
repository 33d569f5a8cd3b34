#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genrank/types.hpp"

namespace genrank {

struct TreeNode {
  int id = 0;           // construction (depth-first) order
  int parent = -1;      // -1 for root
  int label = 0;        // 1-based within parent; 0 for root
  bool leaf = false;
  VectorXf centroid;    // internal nodes only
  int doc_index = -1;   // leaf nodes only
  std::vector<int> children;
};

/// Recursive k-means cluster trie; each document sits in exactly one leaf.
struct SemanticTree {
  int branching = 0;  // C
  int dim = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& root() const { return nodes[0]; }
  int leaf_count() const;
  /// Root-to-leaf label sequence for a node.
  std::vector<int> path_to(int node_id) const;
  /// Resolve a label path to a leaf node id; throws ArgumentError if absent.
  int resolve_path(const std::vector<int>& path) const;
  int max_level_width() const;
};

struct KMeansResult {
  std::vector<int> assignments;  // point -> cluster index
  std::vector<VectorXf> centroids;
};

/// Lloyd's algorithm with k-means++ seeding; k = min(C, distinct points);
/// empty clusters repaired with the farthest-from-centroid point.
KMeansResult kmeans_cluster(const std::vector<VectorXf>& points, int c, std::uint64_t seed);

SemanticTree build_tree(const EmbeddingMatrix& w, int c, std::uint64_t seed);

/// Structural checks; returns human-readable violations, empty when valid.
std::vector<std::string> validate_tree(const SemanticTree& tree, const EmbeddingMatrix& w);

void save_tree(const SemanticTree& tree, const std::string& path);
SemanticTree load_tree(const std::string& path);

}  // namespace genrank
