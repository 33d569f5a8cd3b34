#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genrank/types.hpp"

namespace genrank {

/// Hashed bag-of-words: bucket index -> count, both implicit zero elsewhere.
struct FeatureVector {
  int dim = 0;  // F
  std::vector<std::pair<int, int>> entries;  // (bucket, count), bucket ascending
};

/// Linear text encoder: v = weight^T x + bias, optionally L2-normalized.
struct EncoderParams {
  MatrixXd weight;  // F x d
  VectorXd bias;    // d
  bool normalize = false;

  int feature_dim() const { return static_cast<int>(weight.rows()); }
  int output_dim() const { return static_cast<int>(weight.cols()); }
};

/// Lowercase, split on non-alphanumeric, FNV-1a 64 mod F.
std::vector<std::string> tokenize(const std::string& text);
FeatureVector featurize(const std::string& text, int feature_dim);

VectorXd encode(const EncoderParams& params, const FeatureVector& x);

/// Seeded uniform [-0.05, 0.05] init; the shared starting point for
/// training and the untrained baseline.
EncoderParams default_params(int feature_dim, int output_dim, std::uint64_t seed,
                             bool normalize = false);

/// Encode every document (title + text when title present) into float32 rows.
EmbeddingMatrix encode_corpus(const EncoderParams& params, const std::vector<Document>& docs);
EmbeddingMatrix encode_queries(const EncoderParams& params, const std::vector<Query>& queries);

/// "GRDE" container with kind = 2 marking a parameter file.
void save_params(const EncoderParams& params, const std::string& path);
EncoderParams load_params(const std::string& path);

/// Text fed to featurize for a document: title then text.
std::string document_text(const Document& doc);

}  // namespace genrank
