#pragma once

#include <string>
#include <vector>

#include "genrank/types.hpp"

namespace genrank {

struct MetricReport {
  std::string metric;
  int k = 0;
  std::vector<std::pair<std::string, double>> per_query;
  double mean = 0.0;
  int n_queries = 0;
};

/// Per query: |relevant in top-k| / |relevant|; queries without relevant
/// docs are excluded, judged queries missing from the run score 0.
MetricReport recall_at_k(const RunFile& run, const Qrels& qrels, int k);

/// Per query: reciprocal rank of the first relevant doc within top-k, else 0.
MetricReport mrr_at_k(const RunFile& run, const Qrels& qrels, int k);

}  // namespace genrank
