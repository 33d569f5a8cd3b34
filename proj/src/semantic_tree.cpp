#include "genrank/semantic_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

namespace genrank {

namespace {

double sq_dist(const VectorXf& a, const VectorXf& b) {
  return (a.cast<double>() - b.cast<double>()).squaredNorm();
}

int count_distinct(const std::vector<VectorXf>& points) {
  std::set<std::vector<float>> uniq;
  for (const auto& p : points) uniq.insert(std::vector<float>(p.data(), p.data() + p.size()));
  return static_cast<int>(uniq.size());
}

VectorXf mean_of(const std::vector<VectorXf>& points, const std::vector<int>& members) {
  VectorXd acc = VectorXd::Zero(points[0].size());
  for (int i : members) acc += points[i].cast<double>();
  acc /= static_cast<double>(members.size());
  return acc.cast<float>();
}

}  // namespace

KMeansResult kmeans_cluster(const std::vector<VectorXf>& points, int c, std::uint64_t seed) {
  if (c < 2) throw ArgumentError("kmeans branching factor must be >= 2");
  if (points.empty()) throw ArgumentError("kmeans requires at least one point");
  const int n = static_cast<int>(points.size());
  const int k = std::min(c, count_distinct(points));

  KMeansResult res;
  if (k == 1) {
    res.assignments.assign(n, 0);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    res.centroids.push_back(mean_of(points, all));
    return res;
  }

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  std::vector<VectorXf> centers;
  centers.push_back(points[static_cast<int>(rng() % static_cast<std::uint64_t>(n))]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& ctr : centers) best = std::min(best, sq_dist(points[i], ctr));
      d2[i] = best;
      sum += best;
    }
    int chosen = 0;
    if (sum > 0.0) {
      std::uniform_real_distribution<double> dist(0.0, sum);
      double target = dist(rng);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    } else {
      for (int i = 0; i < n; ++i)
        if (d2[i] > 0.0) {
          chosen = i;
          break;
        }
    }
    centers.push_back(points[chosen]);
  }

  std::vector<int> assign(n, 0);
  std::vector<int> prev(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    for (int i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = sq_dist(points[i], centers[0]);
      for (int j = 1; j < k; ++j) {
        double d = sq_dist(points[i], centers[j]);
        if (d < best_d) {
          best_d = d;
          best_c = j;
        }
      }
      assign[i] = best_c;
    }
    std::vector<int> sizes(k, 0);
    for (int a : assign) ++sizes[a];
    for (int j = 0; j < k; ++j) {
      if (sizes[j] > 0) continue;
      // Move the point farthest from its own centroid (ties: lowest index).
      int pick = -1;
      double far = -1.0;
      for (int i = 0; i < n; ++i) {
        if (sizes[assign[i]] < 2) continue;
        double d = sq_dist(points[i], centers[assign[i]]);
        if (d > far) {
          far = d;
          pick = i;
        }
      }
      if (pick < 0) continue;
      --sizes[assign[pick]];
      assign[pick] = j;
      ++sizes[j];
    }
    for (int j = 0; j < k; ++j) {
      VectorXd acc = VectorXd::Zero(points[0].size());
      int cnt = 0;
      for (int i = 0; i < n; ++i)
        if (assign[i] == j) {
          acc += points[i].cast<double>();
          ++cnt;
        }
      if (cnt > 0) centers[j] = (acc / cnt).cast<float>();
    }
    if (assign == prev) break;
    prev = assign;
  }

  res.assignments = std::move(assign);
  res.centroids = std::move(centers);
  return res;
}

namespace {

struct TreeBuilder {
  const EmbeddingMatrix& w;
  int c;
  std::uint64_t seed;
  std::uint64_t call_counter = 0;
  std::vector<TreeNode> nodes;

  // Builds the subtree over `docs` (ascending doc indices); returns node id.
  int build(const std::vector<int>& docs, int parent, int label) {
    int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[id].id = id;
    nodes[id].parent = parent;
    nodes[id].label = label;
    {
      VectorXd acc = VectorXd::Zero(w.dim);
      for (int d : docs) acc += w.rows.row(d).cast<double>();
      nodes[id].centroid = (acc / static_cast<double>(docs.size())).cast<float>();
    }

    if (static_cast<int>(docs.size()) <= c) {
      int next_label = 1;
      for (int d : docs) {
        int leaf_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[leaf_id].id = leaf_id;
        nodes[leaf_id].parent = id;
        nodes[leaf_id].label = next_label++;
        nodes[leaf_id].leaf = true;
        nodes[leaf_id].doc_index = d;
        nodes[id].children.push_back(leaf_id);
      }
      return id;
    }

    std::vector<VectorXf> points;
    points.reserve(docs.size());
    for (int d : docs) points.push_back(w.rows.row(d).transpose());
    KMeansResult km = kmeans_cluster(points, c, splitmix64(seed + call_counter++));

    std::vector<std::vector<int>> clusters(km.centroids.size());
    for (std::size_t i = 0; i < docs.size(); ++i)
      clusters[km.assignments[i]].push_back(docs[i]);
    std::erase_if(clusters, [](const std::vector<int>& cl) { return cl.empty(); });

    if (clusters.size() < 2) {
      // Degenerate split (duplicate embeddings): force a median split on the
      // maximum-variance coordinate so recursion terminates.
      int coord = 0;
      double best_var = -1.0;
      for (int j = 0; j < w.dim; ++j) {
        double mean = 0.0, var = 0.0;
        for (const auto& p : points) mean += p(j);
        mean /= static_cast<double>(points.size());
        for (const auto& p : points) var += (p(j) - mean) * (p(j) - mean);
        if (var > best_var) {
          best_var = var;
          coord = j;
        }
      }
      std::vector<int> order(docs.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return points[a](coord) < points[b](coord); });
      std::size_t half = docs.size() / 2;
      clusters.assign(2, {});
      for (std::size_t i = 0; i < order.size(); ++i)
        clusters[i < half ? 0 : 1].push_back(docs[order[i]]);
      for (auto& cl : clusters) std::sort(cl.begin(), cl.end());
    }

    int next_label = 1;
    for (const auto& cl : clusters) {
      int child_id = build(cl, id, next_label++);  // may reallocate nodes
      nodes[id].children.push_back(child_id);
    }
    return id;
  }
};

}  // namespace

SemanticTree build_tree(const EmbeddingMatrix& w, int c, std::uint64_t seed) {
  if (c < 2) throw ArgumentError("branching factor must be >= 2");
  if (w.size() == 0) throw ArgumentError("cannot build tree from empty embedding matrix");
  TreeBuilder builder{w, c, seed};
  std::vector<int> all(w.size());
  std::iota(all.begin(), all.end(), 0);
  builder.build(all, -1, 0);
  SemanticTree tree;
  tree.branching = c;
  tree.dim = w.dim;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

int SemanticTree::leaf_count() const {
  int n = 0;
  for (const auto& node : nodes) n += node.leaf ? 1 : 0;
  return n;
}

std::vector<int> SemanticTree::path_to(int node_id) const {
  std::vector<int> path;
  for (int cur = node_id; cur > 0; cur = nodes[cur].parent) path.push_back(nodes[cur].label);
  std::reverse(path.begin(), path.end());
  return path;
}

int SemanticTree::resolve_path(const std::vector<int>& path) const {
  int cur = 0;
  for (int label : path) {
    const auto& ch = nodes[cur].children;
    if (label < 1 || label > static_cast<int>(ch.size()))
      throw ArgumentError("path label out of range");
    cur = ch[label - 1];
  }
  if (!nodes[cur].leaf) throw ArgumentError("path does not end at a leaf");
  return cur;
}

int SemanticTree::max_level_width() const {
  std::vector<int> depth(nodes.size(), 0);
  std::vector<int> width;
  for (const auto& node : nodes) {
    if (node.parent >= 0) depth[node.id] = depth[node.parent] + 1;
    if (depth[node.id] >= static_cast<int>(width.size())) width.resize(depth[node.id] + 1, 0);
    ++width[depth[node.id]];
  }
  int best = 0;
  for (std::size_t lvl = 1; lvl < width.size(); ++lvl) best = std::max(best, width[lvl]);
  return best;
}

std::vector<std::string> validate_tree(const SemanticTree& tree, const EmbeddingMatrix& w) {
  std::vector<std::string> out;
  if (tree.branching < 2) out.push_back("branching factor below 2");
  if (tree.dim != w.dim) out.push_back("tree/matrix dim mismatch");
  if (tree.nodes.empty()) {
    out.push_back("empty tree");
    return out;
  }
  if (tree.nodes[0].parent != -1 || tree.nodes[0].leaf) out.push_back("node 0 is not the root");

  std::vector<int> doc_seen(w.size(), 0);
  for (const auto& node : tree.nodes) {
    if (node.leaf) {
      if (node.doc_index < 0 || node.doc_index >= w.size())
        out.push_back("leaf node " + std::to_string(node.id) + " has bad doc index");
      else if (++doc_seen[node.doc_index] > 1)
        out.push_back("doc " + w.ids[node.doc_index] + " appears in more than one leaf");
      continue;
    }
    if (node.children.empty() ||
        static_cast<int>(node.children.size()) > tree.branching)
      out.push_back("internal node " + std::to_string(node.id) + " has " +
                    std::to_string(node.children.size()) + " children");
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const auto& child = tree.nodes[node.children[i]];
      if (child.parent != node.id)
        out.push_back("child/parent mismatch at node " + std::to_string(child.id));
      if (child.label != static_cast<int>(i) + 1)
        out.push_back("non-consecutive child labels under node " + std::to_string(node.id));
    }
    if (node.centroid.size() != tree.dim) {
      out.push_back("internal node " + std::to_string(node.id) + " has bad centroid dim");
      continue;
    }
    // Centroid must equal the mean of descendant document vectors.
    VectorXd acc = VectorXd::Zero(tree.dim);
    int count = 0;
    std::vector<int> stack = {node.id};
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      if (tree.nodes[cur].leaf) {
        if (tree.nodes[cur].doc_index >= 0 && tree.nodes[cur].doc_index < w.size()) {
          acc += w.rows.row(tree.nodes[cur].doc_index).cast<double>();
          ++count;
        }
      } else {
        for (int ch : tree.nodes[cur].children) stack.push_back(ch);
      }
    }
    if (count > 0) {
      VectorXd mean = acc / count;
      for (int j = 0; j < tree.dim; ++j)
        if (std::abs(mean(j) - static_cast<double>(node.centroid(j))) > 1e-5) {
          out.push_back("centroid mismatch at node " + std::to_string(node.id));
          break;
        }
    }
  }
  for (int i = 0; i < w.size(); ++i)
    if (doc_seen[i] == 0) out.push_back("doc " + w.ids[i] + " missing from tree");
  if (tree.leaf_count() != w.size()) out.push_back("leaf count differs from document count");
  return out;
}

void save_tree(const SemanticTree& tree, const std::string& path) {
  nlohmann::json j;
  j["c"] = tree.branching;
  j["dim"] = tree.dim;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : tree.nodes) {
    nlohmann::json nj;
    nj["id"] = node.id;
    if (node.parent < 0)
      nj["parent"] = nullptr;
    else
      nj["parent"] = node.parent;
    if (node.parent < 0)
      nj["label"] = nullptr;
    else
      nj["label"] = node.label;
    nj["kind"] = node.leaf ? "leaf" : "internal";
    if (node.leaf) {
      nj["centroid"] = nullptr;
      nj["doc_index"] = node.doc_index;
    } else {
      nj["centroid"] = std::vector<float>(node.centroid.data(),
                                          node.centroid.data() + node.centroid.size());
      nj["doc_index"] = nullptr;
    }
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out << j.dump() << '\n';
  if (!out) throw FormatError("write failed: " + path);
}

SemanticTree load_tree(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad tree file: ") + e.what());
  }
  SemanticTree tree;
  tree.branching = j.at("c").get<int>();
  tree.dim = j.at("dim").get<int>();
  for (const auto& nj : j.at("nodes")) {
    TreeNode node;
    node.id = nj.at("id").get<int>();
    node.parent = nj.at("parent").is_null() ? -1 : nj.at("parent").get<int>();
    node.label = nj.at("label").is_null() ? 0 : nj.at("label").get<int>();
    node.leaf = nj.at("kind").get<std::string>() == "leaf";
    if (node.leaf) {
      node.doc_index = nj.at("doc_index").get<int>();
    } else {
      auto vals = nj.at("centroid").get<std::vector<float>>();
      node.centroid = Eigen::Map<VectorXf>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    }
    tree.nodes.push_back(std::move(node));
  }
  for (const auto& node : tree.nodes)
    if (node.parent >= 0) tree.nodes[node.parent].children.push_back(node.id);
  for (auto& node : tree.nodes)
    std::sort(node.children.begin(), node.children.end(),
              [&](int a, int b) { return tree.nodes[a].label < tree.nodes[b].label; });
  return tree;
}

}  // namespace genrank
