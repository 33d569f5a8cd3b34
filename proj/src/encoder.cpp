#include "genrank/encoder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

namespace genrank {

namespace {

constexpr std::uint32_t kParamsKind = 2;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("truncated parameter file reading ") + what);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

FeatureVector featurize(const std::string& text, int feature_dim) {
  if (feature_dim < 1) throw ArgumentError("feature_dim must be >= 1");
  std::map<int, int> counts;
  for (const auto& tok : tokenize(text))
    counts[static_cast<int>(fnv1a64(tok) % static_cast<std::uint64_t>(feature_dim))] += 1;
  FeatureVector fv;
  fv.dim = feature_dim;
  fv.entries.assign(counts.begin(), counts.end());
  return fv;
}

VectorXd encode(const EncoderParams& params, const FeatureVector& x) {
  VectorXd v = params.bias;
  for (const auto& [bucket, count] : x.entries) {
    if (bucket < 0 || bucket >= params.feature_dim())
      throw ArgumentError("feature bucket out of range");
    v += static_cast<double>(count) * params.weight.row(bucket).transpose();
  }
  if (!v.allFinite()) throw NumericError("non-finite encoder output");
  if (params.normalize) {
    double norm = v.norm();
    if (norm > 0.0) v /= norm;
  }
  return v;
}

EncoderParams default_params(int feature_dim, int output_dim, std::uint64_t seed,
                             bool normalize) {
  if (feature_dim < 1 || output_dim < 1) throw ArgumentError("encoder dims must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  EncoderParams p;
  p.weight.resize(feature_dim, output_dim);
  for (int i = 0; i < feature_dim; ++i)
    for (int j = 0; j < output_dim; ++j) p.weight(i, j) = dist(rng);
  p.bias = VectorXd::Zero(output_dim);
  p.normalize = normalize;
  return p;
}

std::string document_text(const Document& doc) {
  if (doc.title && !doc.title->empty()) return *doc.title + " " + doc.text;
  return doc.text;
}

EmbeddingMatrix encode_corpus(const EncoderParams& params, const std::vector<Document>& docs) {
  EmbeddingMatrix m;
  m.dim = params.output_dim();
  m.ids.reserve(docs.size());
  m.rows.resize(static_cast<Eigen::Index>(docs.size()), m.dim);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    m.ids.push_back(docs[i].doc_id);
    VectorXd v = encode(params, featurize(document_text(docs[i]), params.feature_dim()));
    m.rows.row(static_cast<Eigen::Index>(i)) = v.cast<float>();
  }
  return m;
}

EmbeddingMatrix encode_queries(const EncoderParams& params, const std::vector<Query>& queries) {
  EmbeddingMatrix m;
  m.dim = params.output_dim();
  m.ids.reserve(queries.size());
  m.rows.resize(static_cast<Eigen::Index>(queries.size()), m.dim);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    m.ids.push_back(queries[i].query_id);
    VectorXd v = encode(params, featurize(queries[i].text, params.feature_dim()));
    m.rows.row(static_cast<Eigen::Index>(i)) = v.cast<float>();
  }
  return m;
}

void save_params(const EncoderParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out.write("GRDE", 4);
  write_u32(out, 1);  // version
  write_u32(out, kParamsKind);
  write_u32(out, static_cast<std::uint32_t>(params.feature_dim()));
  write_u32(out, static_cast<std::uint32_t>(params.output_dim()));
  write_u32(out, params.normalize ? 1 : 0);
  // Row-major float64 payload: weight then bias.
  for (int i = 0; i < params.feature_dim(); ++i)
    for (int j = 0; j < params.output_dim(); ++j) {
      double v = params.weight(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  for (int j = 0; j < params.output_dim(); ++j) {
    double v = params.bias(j);
    out.write(reinterpret_cast<const char*>(&v), sizeof(double));
  }
  if (!out) throw FormatError("write failed: " + path);
}

EncoderParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "GRDE")
    throw FormatError("bad magic bytes in " + path);
  if (read_u32(in, "version") != 1) throw FormatError("unsupported parameter file version");
  if (read_u32(in, "kind") != kParamsKind)
    throw FormatError("not a parameter file (wrong kind): " + path);
  int F = static_cast<int>(read_u32(in, "F"));
  int d = static_cast<int>(read_u32(in, "d"));
  std::uint32_t normalize = read_u32(in, "normalize");
  EncoderParams p;
  p.weight.resize(F, d);
  p.bias.resize(d);
  p.normalize = normalize != 0;
  for (int i = 0; i < F; ++i)
    for (int j = 0; j < d; ++j) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof(double)))
        throw FormatError("truncated parameter payload in " + path);
      p.weight(i, j) = v;
    }
  for (int j = 0; j < d; ++j) {
    double v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(double)))
      throw FormatError("truncated parameter payload in " + path);
    p.bias(j) = v;
  }
  return p;
}

}  // namespace genrank
