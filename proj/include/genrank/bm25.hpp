#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "genrank/types.hpp"

namespace genrank {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

/// NQ-tuned preset.
inline Bm25Params bm25_tuned_preset() { return {10.0, 0.8}; }

struct Posting {
  int doc = 0;  // ordinal
  int tf = 0;
};

struct Bm25Index {
  std::unordered_map<std::string, std::vector<Posting>> postings;
  std::vector<int> doc_lengths;
  double avgdl = 0.0;
  int doc_count = 0;
  Bm25Params params;
  std::vector<std::string> doc_ids;  // ordinal -> doc_id
};

/// Tokenization shared with the encoder; title prepended when present.
Bm25Index build_bm25(const std::vector<Document>& corpus, const Bm25Params& params);

/// Lucene-style idf = ln(1 + (N - df + 0.5)/(df + 0.5)); duplicated query
/// terms count multiply; zero-score documents are excluded.
RankedList bm25_search(const Bm25Index& index, const std::string& query, int k);

struct MinedNegatives {
  std::map<std::string, std::vector<std::string>> negatives;  // query_id -> doc_ids
  std::vector<std::string> skipped_queries;  // absent from qrels
};

MinedNegatives mine_negatives(const Bm25Index& index, const std::vector<Query>& queries,
                              const Qrels& qrels, int top_k, int per_query);

}  // namespace genrank
