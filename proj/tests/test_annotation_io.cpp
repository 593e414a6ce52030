// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ndater/annotation_io.hpp"
#include "ndater/corpus.hpp"
#include "ndater/synthetic.hpp"

using namespace ndater;

namespace {

const char* kRecord =
    R"({"doc_id":"d1","tokens":["the","court","met","in","1998","."],"sentences":[[0,6]],)"
    R"("dep_edges":[[2,1,"nsubj"],[1,0,"det"],[2,4,"obl"],[4,3,"case"],[2,5,"punct"]],)"
    R"("temporal_nodes":[{"id":"t0","kind":"DCT","span":[0,0]},{"id":"e1","kind":"EVENT","span":[2,3]},)"
    R"({"id":"t1","kind":"TIMEX","span":[4,5],"value":"1998"}],)"
    R"("temporal_edges":[["e1","t1","IS_INCLUDED"],["e1","t0","IS_INCLUDED"]],"gold_year":1998})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

void expect_error(const std::string& line, const std::string& field) {
  try {
    parse_annotation(line, 7);
    FAIL("expected AnnotationError for " << field);
  } catch (const AnnotationError& e) {
    CHECK(e.line == 7);
    CHECK_MESSAGE(e.field.find(field) != std::string::npos, std::string(e.what()));
  }
}

}  // namespace

TEST_CASE("parse a record") {
  const auto d = parse_annotation(kRecord);
  CHECK(d.doc_id == "d1");
  CHECK(d.tokens.size() == 6);
  CHECK(d.temporal_nodes[2].value == "1998");
  CHECK(d.temporal_edges[0].src == 1);
  CHECK(d.temporal_edges[0].dst == 2);
  CHECK(d.gold_year == 1998);
  CHECK(d.has_year_mention);
}

TEST_CASE("serialization is canonical and round-trips") {
  const auto d = parse_annotation(kRecord);
  const auto text = serialize_annotation(d);
  CHECK(text == kRecord);
  CHECK(parse_annotation(text) == d);

  SyntheticOptions o;
  o.n_docs = 40;
  o.difficulty = Difficulty::Hard;
  o.no_mention_fraction = 0.5;
  for (const auto& s : generate_synthetic_corpus(o)) {
    CHECK(parse_annotation(serialize_annotation(s.doc)) == s.doc);
  }
}

TEST_CASE("schema deviations are rejected with a field") {
  expect_error(replace(kRecord, R"("doc_id":"d1")", R"("doc_id":"d1","extra":1)"), "extra");
  expect_error(replace(kRecord, R"("doc_id":"d1",)", ""), "doc_id");
  expect_error(replace(kRecord, R"("gold_year":1998)", R"("gold_year":"1998")"), "gold_year");
  expect_error(replace(kRecord, R"([2,1,"nsubj"])", R"([2,1])"), "dep_edges[0]");
  expect_error(replace(kRecord, R"("kind":"EVENT")", R"("kind":"STATE")"), "temporal_nodes[1].kind");
  expect_error(replace(kRecord, R"(["e1","t1","IS_INCLUDED"])", R"(["e1","zz","IS_INCLUDED"])"),
               "temporal_edges[0]");
  expect_error(replace(kRecord, R"("span":[2,3])", R"("span":[2,30])"), "temporal_nodes[1].span");
  expect_error("{not json", "record");
  expect_error("[1,2]", "record");
}

TEST_CASE("relations outside the kept five are dropped and counted") {
  IngestStats stats;
  const auto line = replace(kRecord, R"(["e1","t1","IS_INCLUDED"])", R"(["e1","t1","SIMULTANEOUS"])");
  const auto d = parse_annotation(line, 1, &stats);
  CHECK(d.temporal_edges.size() == 1);
  CHECK(stats.dropped_relations.at("SIMULTANEOUS") == 1);
  CHECK(stats.dropped_total() == 1);
}

TEST_CASE("annotation files report the failing line") {
  const auto dir = std::filesystem::temp_directory_path() / "ndater_io_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "docs.jsonl").string();
  {
    std::ofstream f(path);
    f << kRecord << "\n\n" << replace(kRecord, R"("d1")", R"("d2")") << "\n" << "{\"doc_id\": 3}\n";
  }
  try {
    read_annotation_file(path);
    FAIL("expected AnnotationError");
  } catch (const AnnotationError& e) {
    CHECK(e.line == 4);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus directories round trip with their split") {
  SyntheticOptions o;
  o.n_docs = 30;
  Corpus c;
  c.start_year = o.start_year;
  c.end_year = o.end_year;
  for (const auto& s : generate_synthetic_corpus(o)) c.docs.push_back(s.doc);
  c.split = make_split(c.ids(), 5);
  const auto dir = (std::filesystem::temp_directory_path() / "ndater_corpus_test").string();
  save_corpus(dir, c);
  const auto back = load_corpus(dir);
  CHECK(back.docs == c.docs);
  CHECK(back.split.train == c.split.train);
  CHECK(back.split.test == c.split.test);
  CHECK(back.start_year == c.start_year);
  std::filesystem::remove_all(dir);
}

TEST_CASE("splits are seeded, disjoint and complete") {
  std::vector<std::string> ids;
  for (int i = 0; i < 101; ++i) ids.push_back("d" + std::to_string(i));
  const auto a = make_split(ids, 9);
  const auto b = make_split(ids, 9);
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK(a.test == b.test);
  CHECK(a.train.size() == 80);
  CHECK(a.dev.size() == 10);
  CHECK(a.test.size() == 11);
  CHECK_NOTHROW(check_split(a, ids));
  CHECK(make_split(ids, 10).train != a.train);

  auto broken = a;
  broken.test.push_back(broken.train.front());
  CHECK_THROWS_AS(check_split(broken, ids), ValidationError);
  broken = a;
  broken.test.pop_back();
  CHECK_THROWS_AS(check_split(broken, ids), ValidationError);
  CHECK_THROWS_AS(make_split(ids, 1, {0.0, 0.0, 0.0}), ConfigError);
}
