#include "genrank/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "genrank/encoder.hpp"

namespace genrank {

Bm25Index build_bm25(const std::vector<Document>& corpus, const Bm25Params& params) {
  if (corpus.empty()) throw ArgumentError("cannot build BM25 index from empty corpus");
  if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0)
    throw ArgumentError("bad BM25 parameters");
  Bm25Index index;
  index.params = params;
  index.doc_count = static_cast<int>(corpus.size());
  index.doc_lengths.reserve(corpus.size());
  index.doc_ids.reserve(corpus.size());
  long long total_len = 0;
  for (int ord = 0; ord < index.doc_count; ++ord) {
    const Document& doc = corpus[ord];
    index.doc_ids.push_back(doc.doc_id);
    std::map<std::string, int> tf;
    auto tokens = tokenize(document_text(doc));
    for (const auto& tok : tokens) ++tf[tok];
    index.doc_lengths.push_back(static_cast<int>(tokens.size()));
    total_len += static_cast<long long>(tokens.size());
    for (const auto& [term, freq] : tf) index.postings[term].push_back({ord, freq});
  }
  index.avgdl = static_cast<double>(total_len) / index.doc_count;
  return index;
}

RankedList bm25_search(const Bm25Index& index, const std::string& query, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  std::vector<double> scores(index.doc_count, 0.0);
  std::vector<char> touched(index.doc_count, 0);
  const double k1 = index.params.k1;
  const double b = index.params.b;
  for (const auto& term : tokenize(query)) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    const auto& plist = it->second;
    double df = static_cast<double>(plist.size());
    double idf = std::log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5));
    for (const Posting& p : plist) {
      double tf = static_cast<double>(p.tf);
      double norm = k1 * (1.0 - b + b * index.doc_lengths[p.doc] / index.avgdl);
      scores[p.doc] += idf * tf * (k1 + 1.0) / (tf + norm);
      touched[p.doc] = 1;
    }
  }
  std::vector<int> hit;
  for (int i = 0; i < index.doc_count; ++i)
    if (touched[i] && scores[i] > 0.0) hit.push_back(i);
  std::sort(hit.begin(), hit.end(), [&](int a, int b2) {
    if (scores[a] != scores[b2]) return scores[a] > scores[b2];
    return a < b2;
  });
  if (static_cast<int>(hit.size()) > k) hit.resize(k);
  RankedList out;
  for (int i : hit) out.push_back({index.doc_ids[i], static_cast<float>(scores[i])});
  return out;
}

MinedNegatives mine_negatives(const Bm25Index& index, const std::vector<Query>& queries,
                              const Qrels& qrels, int top_k, int per_query) {
  if (top_k < per_query || per_query < 0) throw ArgumentError("need top_k >= per_query >= 0");
  MinedNegatives out;
  for (const Query& q : queries) {
    auto it = qrels.find(q.query_id);
    if (it == qrels.end()) {
      out.skipped_queries.push_back(q.query_id);
      continue;
    }
    std::set<std::string> positives;
    for (const auto& [docid, grade] : it->second)
      if (grade > 0) positives.insert(docid);
    std::vector<std::string> negs;
    if (per_query > 0 && top_k > 0) {
      for (const auto& hit : bm25_search(index, q.text, top_k)) {
        if (positives.count(hit.doc_id)) continue;
        negs.push_back(hit.doc_id);
        if (static_cast<int>(negs.size()) == per_query) break;
      }
    }
    out.negatives[q.query_id] = std::move(negs);
  }
  return out;
}

}  // namespace genrank
