#pragma once

#include <string>
#include <vector>

#include "genrank/types.hpp"

namespace genrank {

/// Line-delimited JSON, one {"doc_id", "title"?, "text"} object per line.
std::vector<Document> load_corpus(const std::string& path);

/// Tab-separated "query_id TAB text".
std::vector<Query> load_queries(const std::string& path);

/// TREC 4-column "qid 0 docid grade".
Qrels load_qrels(const std::string& path);

void save_embeddings(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

/// TREC 6-column "qid Q0 docid rank score tag"; validates rank/score
/// invariants before writing anything.
void write_run(const RunFile& run, const std::string& path);
RunFile load_run(const std::string& path);

/// Score text format used in run files: 6 significant digits, decimal
/// point forced ("6" becomes "6.0").
std::string format_score(float score);

}  // namespace genrank
