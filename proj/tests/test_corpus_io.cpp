#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "genrank/corpus_io.hpp"

using namespace genrank;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("genrank_io_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("load_corpus parses JSONL in order") {
  TempDir tmp;
  auto p = tmp.file("corpus.jsonl");
  write_file(p,
             "{\"doc_id\": \"d1\", \"text\": \"hello\"}\n"
             "{\"doc_id\": \"d2\", \"title\": \"t\", \"text\": \"world\"}\n");
  auto docs = load_corpus(p);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].doc_id == "d1");
  CHECK(docs[1].doc_id == "d2");
  CHECK(docs[1].title == "t");
  CHECK_FALSE(docs[0].title.has_value());
}

TEST_CASE("load_corpus skips blank lines") {
  TempDir tmp;
  auto p = tmp.file("corpus.jsonl");
  write_file(p, "{\"doc_id\": \"d1\", \"text\": \"a\"}\n\n{\"doc_id\": \"d2\", \"text\": \"b\"}\n");
  CHECK(load_corpus(p).size() == 2);
}

TEST_CASE("load_corpus rejects duplicate id citing the line") {
  TempDir tmp;
  auto p = tmp.file("corpus.jsonl");
  write_file(p,
             "{\"doc_id\": \"d1\", \"text\": \"a\"}\n"
             "{\"doc_id\": \"d2\", \"text\": \"b\"}\n"
             "{\"doc_id\": \"d1\", \"text\": \"c\"}\n");
  try {
    load_corpus(p);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("d1") != std::string::npos);
  }
}

TEST_CASE("load_corpus rejects a record missing text with line number") {
  TempDir tmp;
  auto p = tmp.file("corpus.jsonl");
  write_file(p, "{\"doc_id\": \"d1\", \"text\": \"a\"}\n{\"doc_id\": \"d2\"}\n");
  try {
    load_corpus(p);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("load_corpus rejects invalid UTF-8") {
  TempDir tmp;
  auto p = tmp.file("corpus.jsonl");
  write_file(p, std::string("{\"doc_id\": \"d1\", \"text\": \"a\xff\xfe\"}\n"));
  CHECK_THROWS_AS(load_corpus(p), FormatError);
}

TEST_CASE("load_qrels parses TREC 4-column format") {
  TempDir tmp;
  auto p = tmp.file("qrels.txt");
  write_file(p, "q1 0 d1 1\nq1 0 d2 0\n");
  auto qrels = load_qrels(p);
  REQUIRE(qrels.count("q1") == 1);
  CHECK(qrels["q1"].at("d1") == 1);
  CHECK(qrels["q1"].at("d2") == 0);
}

TEST_CASE("load_qrels of empty file is empty") {
  TempDir tmp;
  auto p = tmp.file("qrels.txt");
  write_file(p, "");
  CHECK(load_qrels(p).empty());
}

TEST_CASE("load_qrels rejects non-integer grade") {
  TempDir tmp;
  auto p = tmp.file("qrels.txt");
  write_file(p, "q1 0 d1 x\n");
  CHECK_THROWS_AS(load_qrels(p), FormatError);
}

TEST_CASE("load_qrels rejects repeated pair") {
  TempDir tmp;
  auto p = tmp.file("qrels.txt");
  write_file(p, "q1 0 d1 1\nq1 0 d1 0\n");
  CHECK_THROWS_AS(load_qrels(p), FormatError);
}

TEST_CASE("embeddings round-trip bit-exactly") {
  TempDir tmp;
  EmbeddingMatrix m;
  m.dim = 4;
  m.ids = {"a", "b", "c"};
  m.rows.resize(3, 4);
  m.rows << 0.0f, 1.0f, -2.5f, 3.25f, 1e-30f, -1e30f, 0.1f, 7.0f, 4.0f, 5.0f, 6.0f, -0.0f;
  auto p = tmp.file("emb.bin");
  save_embeddings(m, p);
  auto loaded = load_embeddings(p);
  CHECK(loaded.dim == m.dim);
  CHECK(loaded.ids == m.ids);
  REQUIRE(loaded.rows.rows() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::memcmp(&loaded.rows(i, j), &m.rows(i, j), sizeof(float)) == 0);
}

TEST_CASE("empty matrix round-trips with its dim") {
  TempDir tmp;
  EmbeddingMatrix m;
  m.dim = 8;
  m.rows.resize(0, 8);
  auto p = tmp.file("emb.bin");
  save_embeddings(m, p);
  auto loaded = load_embeddings(p);
  CHECK(loaded.dim == 8);
  CHECK(loaded.ids.empty());
}

TEST_CASE("save rejects dim zero") {
  TempDir tmp;
  EmbeddingMatrix m;
  m.dim = 0;
  CHECK_THROWS_AS(save_embeddings(m, tmp.file("emb.bin")), ArgumentError);
}

TEST_CASE("corrupted magic bytes rejected") {
  TempDir tmp;
  EmbeddingMatrix m;
  m.dim = 2;
  m.ids = {"a"};
  m.rows.resize(1, 2);
  m.rows << 1.0f, 2.0f;
  auto p = tmp.file("emb.bin");
  save_embeddings(m, p);
  auto bytes = read_file(p);
  bytes[0] = 'X';
  write_file(p, bytes);
  CHECK_THROWS_AS(load_embeddings(p), FormatError);
}

TEST_CASE("truncated payload rejected") {
  TempDir tmp;
  EmbeddingMatrix m;
  m.dim = 4;
  m.ids = {"a", "b"};
  m.rows.resize(2, 4);
  m.rows.setConstant(1.5f);
  auto p = tmp.file("emb.bin");
  save_embeddings(m, p);
  auto bytes = read_file(p);
  write_file(p, bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(load_embeddings(p), FormatError);
}

TEST_CASE("write_run produces the TREC format") {
  TempDir tmp;
  RunFile run;
  run.tag = "genrank";
  run.queries.push_back({"q1", {{"d2", 1, 6.0f}, {"d1", 2, 1.0f}}});
  auto p = tmp.file("run.txt");
  write_run(run, p);
  CHECK(read_file(p) == "q1 Q0 d2 1 6.0 genrank\nq1 Q0 d1 2 1.0 genrank\n");
}

TEST_CASE("empty run writes an empty file") {
  TempDir tmp;
  auto p = tmp.file("run.txt");
  write_run(RunFile{"t", {}}, p);
  CHECK(read_file(p).empty());
}

TEST_CASE("write_run rejects rank gaps and non-monotone scores") {
  TempDir tmp;
  RunFile gap;
  gap.tag = "t";
  gap.queries.push_back({"q1", {{"d1", 1, 2.0f}, {"d2", 3, 1.0f}}});
  CHECK_THROWS_AS(write_run(gap, tmp.file("a.txt")), ArgumentError);

  RunFile bad;
  bad.tag = "t";
  bad.queries.push_back({"q1", {{"d1", 1, 1.0f}, {"d2", 2, 2.0f}}});
  CHECK_THROWS_AS(write_run(bad, tmp.file("b.txt")), ArgumentError);
  CHECK_FALSE(std::filesystem::exists(tmp.file("b.txt")));
}

TEST_CASE("run round-trips through text up to 6-digit score formatting") {
  TempDir tmp;
  RunFile run;
  run.tag = "tag";
  run.queries.push_back({"q1", {{"d1", 1, 0.123456789f}, {"d2", 2, 0.000012345f}}});
  run.queries.push_back({"q2", {{"d3", 1, -4.5f}}});
  auto p = tmp.file("run.txt");
  write_run(run, p);
  RunFile loaded = load_run(p);
  REQUIRE(loaded.queries.size() == 2);
  CHECK(loaded.tag == "tag");
  for (std::size_t qi = 0; qi < run.queries.size(); ++qi) {
    REQUIRE(loaded.queries[qi].second.size() == run.queries[qi].second.size());
    for (std::size_t i = 0; i < run.queries[qi].second.size(); ++i) {
      const auto& a = run.queries[qi].second[i];
      const auto& b = loaded.queries[qi].second[i];
      CHECK(a.doc_id == b.doc_id);
      CHECK(a.rank == b.rank);
      CHECK(format_score(a.score) == format_score(b.score));
    }
  }
}

TEST_CASE("load_queries parses TSV") {
  TempDir tmp;
  auto p = tmp.file("q.tsv");
  write_file(p, "q1\twhat is a cat\nq2\tdogs\n");
  auto queries = load_queries(p);
  REQUIRE(queries.size() == 2);
  CHECK(queries[0].text == "what is a cat");
  CHECK(queries[1].query_id == "q2");
}
