#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genrank/encoder.hpp"
#include "genrank/types.hpp"

namespace genrank {

enum class TrainMode { TiedContrastive, TiedMarginMse, FreeDsi };

struct TrainConfig {
  TrainMode mode = TrainMode::TiedContrastive;
  double learning_rate = 0.1;
  int steps = 0;
  int batch_size = 1;
  int negatives_per_query = 0;
  double temperature = 1.0;
  double multitask_ratio = 0.5;  // fraction of indexing-task samples, free-dsi
  std::uint64_t seed = 42;
};

/// Trainable per-document embedding rows, one per DocID. Documents absent
/// from the table have no representation at all.
struct FreeEmbeddingTable {
  MatrixXd rows;  // N x d
  std::vector<std::string> ids;

  int index_of(const std::string& doc_id) const;  // throws MissingIdentifierError
  VectorXd doc_vector(const std::string& doc_id) const;
};

struct InfoNceGrad {
  double loss = 0.0;
  VectorXd dq;
  VectorXd dpos;
  std::vector<VectorXd> dnegs;
};

InfoNceGrad infonce_loss(const VectorXd& q, const VectorXd& positive,
                         const std::vector<VectorXd>& negatives, double tau);

struct MarginMseGrad {
  double loss = 0.0;
  std::vector<double> dstudent;
};

MarginMseGrad margin_mse_loss(const std::vector<double>& student,
                              const std::vector<double>& teacher);

struct DsiCeGrad {
  double loss = 0.0;
  VectorXd dh;
  MatrixXd dtable;
};

DsiCeGrad dsi_ce_loss(const VectorXd& h, const FreeEmbeddingTable& table, int target_index);

/// One training example. Tied modes encode the query features and the
/// positive/negative documents; free-dsi encodes `input_feat` (query text for
/// retrieval samples, document text for indexing samples) and targets a
/// table row.
struct BatchItem {
  FeatureVector input_feat;
  int positive = 0;  // doc index
  std::vector<int> negatives;
  std::vector<double> teacher_margins;  // tied-marginmse only, one per negative
};

struct TrainBatch {
  std::vector<BatchItem> items;
};

struct Gradients {
  double loss = 0.0;
  MatrixXd dweight;
  VectorXd dbias;
  MatrixXd dtable;  // free-dsi only
};

/// Batch-mean loss and exact analytic gradients for the configured mode.
Gradients compute_gradients(const EncoderParams& params, const FreeEmbeddingTable* table,
                            const std::vector<FeatureVector>& doc_feats, const TrainBatch& batch,
                            const TrainConfig& config);

struct TrainPair {
  std::string query_id;
  std::string doc_id;
};

struct TrainResult {
  EncoderParams params;
  std::optional<FreeEmbeddingTable> table;  // free-dsi
  std::vector<double> loss_log;             // one entry per step
};

/// Deterministic fixed-rate SGD loop. Negatives per query are the supplied
/// BM25 negatives plus in-batch positives of the other queries, deduplicated
/// with the item's own positive excluded.
TrainResult train(const std::vector<Document>& corpus, const std::vector<Query>& queries,
                  const std::vector<TrainPair>& pairs,
                  const std::map<std::string, std::vector<std::string>>& bm25_negatives,
                  const std::map<std::string, std::map<std::string, double>>& teacher_margins,
                  const EncoderParams& init, const TrainConfig& config);

}  // namespace genrank
