#include "genrank/corpus_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace genrank {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  return out;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    unsigned char b = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("truncated embedding file reading ") + what);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

std::uint64_t read_u64(std::istream& in, const char* what) {
  std::uint64_t v = 0;
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw FormatError(std::string("truncated embedding file reading ") + what);
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string())
      throw FormatError("corpus line " + std::to_string(line_no) + ": missing doc_id");
    if (!j.contains("text") || !j["text"].is_string())
      throw FormatError("corpus line " + std::to_string(line_no) + ": missing text");
    Document d;
    d.doc_id = j["doc_id"].get<std::string>();
    d.text = j["text"].get<std::string>();
    if (j.contains("title")) {
      if (!j["title"].is_string())
        throw FormatError("corpus line " + std::to_string(line_no) + ": title must be a string");
      d.title = j["title"].get<std::string>();
    }
    if (d.doc_id.empty())
      throw FormatError("corpus line " + std::to_string(line_no) + ": empty doc_id");
    if (d.text.empty())
      throw FormatError("corpus line " + std::to_string(line_no) + ": empty text");
    if (!seen.insert(d.doc_id).second)
      throw FormatError("corpus line " + std::to_string(line_no) + ": duplicate doc_id \"" +
                        d.doc_id + "\"");
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<Query> load_queries(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<Query> queries;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("queries line " + std::to_string(line_no) + ": expected TAB separator");
    Query q{line.substr(0, tab), line.substr(tab + 1)};
    if (q.query_id.empty() || q.text.empty())
      throw FormatError("queries line " + std::to_string(line_no) + ": empty field");
    if (!seen.insert(q.query_id).second)
      throw FormatError("queries line " + std::to_string(line_no) + ": duplicate query_id \"" +
                        q.query_id + "\"");
    queries.push_back(std::move(q));
  }
  return queries;
}

Qrels load_qrels(const std::string& path) {
  std::ifstream in = open_input(path);
  Qrels qrels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, zero, docid, grade_str, extra;
    if (!(ss >> qid >> zero >> docid >> grade_str) || (ss >> extra))
      throw FormatError("qrels line " + std::to_string(line_no) + ": expected 4 columns");
    int grade = 0;
    std::size_t pos = 0;
    try {
      grade = std::stoi(grade_str, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != grade_str.size() || grade < 0)
      throw FormatError("qrels line " + std::to_string(line_no) + ": bad grade \"" + grade_str +
                        "\"");
    auto& m = qrels[qid];
    if (!m.emplace(docid, grade).second)
      throw FormatError("qrels line " + std::to_string(line_no) + ": repeated pair (" + qid +
                        ", " + docid + ")");
  }
  return qrels;
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  if (m.dim <= 0) throw ArgumentError("embedding dim must be positive");
  if (static_cast<int>(m.ids.size()) != m.rows.rows() ||
      (m.rows.rows() > 0 && m.rows.cols() != m.dim))
    throw ArgumentError("embedding matrix shape inconsistent with ids/dim");
  std::ofstream out = open_output(path);
  out.write("GRDE", 4);
  write_u32(out, 1);  // version
  write_u32(out, static_cast<std::uint32_t>(m.dim));
  write_u64(out, static_cast<std::uint64_t>(m.ids.size()));
  for (const auto& id : m.ids) {
    write_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  if (m.rows.size() > 0)
    out.write(reinterpret_cast<const char*>(m.rows.data()),
              static_cast<std::streamsize>(sizeof(float) * m.rows.size()));
  if (!out) throw FormatError("write failed: " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in = open_input(path);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "GRDE")
    throw FormatError("bad magic bytes in " + path);
  std::uint32_t version = read_u32(in, "version");
  if (version != 1) throw FormatError("unsupported embedding file version");
  EmbeddingMatrix m;
  m.dim = static_cast<int>(read_u32(in, "dim"));
  std::uint64_t n = read_u64(in, "count");
  m.ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t len = read_u32(in, "id length");
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw FormatError("truncated embedding file reading id");
    m.ids.push_back(std::move(id));
  }
  m.rows.resize(static_cast<Eigen::Index>(n), m.dim);
  if (m.rows.size() > 0 &&
      !in.read(reinterpret_cast<char*>(m.rows.data()),
               static_cast<std::streamsize>(sizeof(float) * m.rows.size())))
    throw FormatError("truncated embedding payload in " + path);
  return m;
}

std::string format_score(float score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(score));
  std::string s(buf);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

void write_run(const RunFile& run, const std::string& path) {
  for (const auto& [qid, entries] : run.queries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].rank != static_cast<int>(i) + 1)
        throw ArgumentError("run for query " + qid + " has rank gap at position " +
                            std::to_string(i + 1));
      if (i > 0 && entries[i].score > entries[i - 1].score)
        throw ArgumentError("run for query " + qid + " has non-monotone scores");
    }
  }
  std::ofstream out = open_output(path);
  for (const auto& [qid, entries] : run.queries)
    for (const auto& e : entries)
      out << qid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_score(e.score) << ' '
          << run.tag << '\n';
  if (!out) throw FormatError("write failed: " + path);
}

RunFile load_run(const std::string& path) {
  std::ifstream in = open_input(path);
  RunFile run;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, q0, docid, tag;
    int rank;
    float score;
    if (!(ss >> qid >> q0 >> docid >> rank >> score >> tag))
      throw FormatError("run line " + std::to_string(line_no) + ": expected 6 columns");
    auto [it, inserted] = index.emplace(qid, run.queries.size());
    if (inserted) run.queries.emplace_back(qid, std::vector<RunEntry>{});
    run.queries[it->second].second.push_back({docid, rank, score});
    run.tag = tag;
  }
  return run;
}

}  // namespace genrank
