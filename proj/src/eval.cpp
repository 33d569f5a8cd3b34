#include "genrank/eval.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace genrank {

namespace {

std::unordered_map<std::string, const std::vector<RunEntry>*> run_by_query(const RunFile& run) {
  std::unordered_map<std::string, const std::vector<RunEntry>*> m;
  for (const auto& [qid, entries] : run.queries) m[qid] = &entries;
  return m;
}

std::set<std::string> relevant_docs(const std::map<std::string, int>& judged) {
  std::set<std::string> rel;
  for (const auto& [docid, grade] : judged)
    if (grade > 0) rel.insert(docid);
  return rel;
}

}  // namespace

MetricReport recall_at_k(const RunFile& run, const Qrels& qrels, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  MetricReport report;
  report.metric = "recall";
  report.k = k;
  auto by_query = run_by_query(run);
  double sum = 0.0;
  for (const auto& [qid, judged] : qrels) {
    auto rel = relevant_docs(judged);
    if (rel.empty()) continue;
    int hits = 0;
    if (auto it = by_query.find(qid); it != by_query.end()) {
      const auto& entries = *it->second;
      for (std::size_t i = 0; i < entries.size() && static_cast<int>(i) < k; ++i)
        if (rel.count(entries[i].doc_id)) ++hits;
    }
    double value = static_cast<double>(hits) / static_cast<double>(rel.size());
    report.per_query.emplace_back(qid, value);
    sum += value;
  }
  report.n_queries = static_cast<int>(report.per_query.size());
  report.mean = report.n_queries > 0 ? sum / report.n_queries : 0.0;
  return report;
}

MetricReport mrr_at_k(const RunFile& run, const Qrels& qrels, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  MetricReport report;
  report.metric = "mrr";
  report.k = k;
  auto by_query = run_by_query(run);
  double sum = 0.0;
  for (const auto& [qid, judged] : qrels) {
    auto rel = relevant_docs(judged);
    if (rel.empty()) continue;
    double value = 0.0;
    if (auto it = by_query.find(qid); it != by_query.end()) {
      const auto& entries = *it->second;
      for (std::size_t i = 0; i < entries.size() && static_cast<int>(i) < k; ++i)
        if (rel.count(entries[i].doc_id)) {
          value = 1.0 / static_cast<double>(i + 1);
          break;
        }
    }
    report.per_query.emplace_back(qid, value);
    sum += value;
  }
  report.n_queries = static_cast<int>(report.per_query.size());
  report.mean = report.n_queries > 0 ? sum / report.n_queries : 0.0;
  return report;
}

}  // namespace genrank
