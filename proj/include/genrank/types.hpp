#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace genrank {

using Eigen::MatrixXd;
using Eigen::MatrixXf;
using Eigen::VectorXd;
using Eigen::VectorXf;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingIdentifierError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Document {
  std::string doc_id;
  std::optional<std::string> title;
  std::string text;
};

struct Query {
  std::string query_id;
  std::string text;
};

/// query_id -> (doc_id -> relevance grade)
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// Aligned doc-id list plus one dense float32 row per document.
struct EmbeddingMatrix {
  int dim = 0;
  std::vector<std::string> ids;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;

  int size() const { return static_cast<int>(ids.size()); }
};

struct ScoredDoc {
  std::string doc_id;
  float score = 0.0f;
};

/// Descending by score, ties broken by ascending position in the id list.
using RankedList = std::vector<ScoredDoc>;

struct RunEntry {
  std::string doc_id;
  int rank = 0;  // 1-based
  float score = 0.0f;
};

struct RunFile {
  std::string tag;
  // Query order is preserved as inserted; written in this order.
  std::vector<std::pair<std::string, std::vector<RunEntry>>> queries;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace genrank
