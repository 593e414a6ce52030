// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "ndater/document.hpp"
#include "ndater/errors.hpp"
#include "ndater/synthetic.hpp"
#include "oracles.hpp"

using namespace ndater;

namespace {

// "the court met in 1998 ." with one event, one TIMEX and the DCT.
AnnotatedDocument small_doc() {
  AnnotatedDocument d;
  d.doc_id = "small";
  d.tokens = {"the", "court", "met", "in", "1998", "."};
  d.sentences = {{0, 6}};
  d.dep_edges = {{2, 1, "nsubj"}, {1, 0, "det"}, {2, 4, "obl"}, {4, 3, "case"}, {2, 5, "punct"}};
  d.temporal_nodes = {{"t0", NodeKind::Dct, {0, 0}, std::nullopt},
                      {"e1", NodeKind::Event, {2, 3}, std::nullopt},
                      {"t1", NodeKind::Timex, {4, 5}, std::string("1998")}};
  d.temporal_edges = {{1, 2, TemporalRelation::IsIncluded}, {1, 0, TemporalRelation::IsIncluded}};
  d.gold_year = 1998;
  d.has_year_mention = true;
  return d;
}

}  // namespace

TEST_CASE("a well-formed document validates") {
  CHECK_NOTHROW(validate(small_doc()));
  CHECK(compute_has_year_mention(small_doc()));
  CHECK(dct_index(small_doc()) == 0);
}

TEST_CASE("validation failures name the field") {
  auto expect_field = [](AnnotatedDocument d, const std::string& field) {
    try {
      validate(d);
      FAIL("expected a ValidationError mentioning " << field);
    } catch (const ValidationError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(field) != std::string::npos, e.what());
    }
  };
  auto d = small_doc();
  SUBCASE("sentences must tile the tokens") {
    d.sentences = {{0, 3}, {4, 6}};
    expect_field(d, "sentences[1]");
  }
  SUBCASE("sentence coverage") {
    d.sentences = {{0, 5}};
    expect_field(d, "sentences");
  }
  SUBCASE("dependency index out of range") {
    d.dep_edges.push_back({2, 9, "x"});
    expect_field(d, "dep_edges[5]");
  }
  SUBCASE("dependency crossing sentences") {
    d.sentences = {{0, 3}, {3, 6}};
    expect_field(d, "dep_edges[2]");
  }
  SUBCASE("reserved self-loop label") {
    d.dep_edges[0].label = std::string(kSelfLoopLabel);
    expect_field(d, "dep_edges[0]");
  }
  SUBCASE("duplicate node id") {
    d.temporal_nodes[2].id = "e1";
    expect_field(d, "temporal_nodes[2].id");
  }
  SUBCASE("missing DCT") {
    d.temporal_nodes[0].kind = NodeKind::Timex;
    expect_field(d, "temporal_nodes");
  }
  SUBCASE("two DCT nodes") {
    d.temporal_nodes.push_back({"t9", NodeKind::Dct, {0, 0}, std::nullopt});
    expect_field(d, "temporal_nodes");
  }
  SUBCASE("empty event span") {
    d.temporal_nodes[1].span = {2, 2};
    expect_field(d, "temporal_nodes[1].span");
  }
  SUBCASE("value on an event") {
    d.temporal_nodes[1].value = "1998";
    expect_field(d, "temporal_nodes[1].value");
  }
  SUBCASE("edge to a missing node") {
    d.temporal_edges.push_back({1, 7, TemporalRelation::After});
    expect_field(d, "temporal_edges[2]");
  }
}

TEST_CASE("year mentions need four consecutive digits") {
  auto d = small_doc();
  d.temporal_nodes[2].value = "XX98";
  CHECK_FALSE(compute_has_year_mention(d));
  d.temporal_nodes[2].value = "P4Y";
  CHECK_FALSE(compute_has_year_mention(d));
  d.temporal_nodes[2].value = "1998-05";
  CHECK(compute_has_year_mention(d));
}

TEST_CASE("relation names round trip and unknown names are not kept") {
  for (auto rel : kTemporalRelations) CHECK(parse_temporal_relation(to_string(rel)) == rel);
  CHECK_FALSE(parse_temporal_relation("SIMULTANEOUS").has_value());
  CHECK_FALSE(parse_temporal_relation("after").has_value());
  CHECK(parse_node_kind("DCT") == NodeKind::Dct);
}

TEST_CASE("edge-set expansion adds inverses and one self-loop per node") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const auto g = oracle::random_graph(n, rng() % 20, oracle::temporal_labels(), rng);
    const auto e = expand_edges(g);

    std::set<std::tuple<std::size_t, std::size_t, std::string>> dedup;
    for (const auto& edge : g.edges) dedup.emplace(edge.src, edge.dst, edge.label);
    REQUIRE(e.edges.size() == 2 * dedup.size() + n);
    CHECK(e.expanded);
    CHECK(std::is_sorted(e.edges.begin(), e.edges.end()));

    std::multiset<std::tuple<std::size_t, std::size_t, std::string>> forward, inverse;
    std::vector<int> loops(n, 0);
    for (const auto& edge : e.edges) {
      if (edge.direction == EdgeDirection::Forward) forward.emplace(edge.src, edge.dst, edge.label);
      if (edge.direction == EdgeDirection::Inverse) inverse.emplace(edge.dst, edge.src, edge.label);
      if (edge.direction == EdgeDirection::SelfLoop) {
        CHECK(edge.src == edge.dst);
        CHECK(edge.label == kSelfLoopLabel);
        ++loops[edge.src];
      }
    }
    CHECK(std::set(forward.begin(), forward.end()) == dedup);
    CHECK(forward == inverse);
    CHECK(std::all_of(loops.begin(), loops.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("expansion rejects expanded or malformed input") {
  LabeledGraph g;
  g.node_count = 2;
  g.edges = {{0, 1, "AFTER", EdgeDirection::Forward}};
  const auto e = expand_edges(g);
  CHECK_THROWS_AS(expand_edges(e), ValidationError);
  g.edges.push_back({0, 5, "AFTER", EdgeDirection::Forward});
  CHECK_THROWS_AS(expand_edges(g), ValidationError);
  LabeledGraph empty;
  CHECK_THROWS_AS(expand_edges(empty), ValidationError);
}

TEST_CASE("syntactic labels collapse to three classes") {
  const auto doc = small_doc();
  const auto g = collapse_syntactic_labels(expand_edges(dependency_graph(doc)));
  REQUIRE(g.relations == std::vector<std::string>{"→", "←", "⊤"});
  std::map<std::size_t, std::size_t> counts;
  for (const auto& e : g.edges) ++counts[e.relation];
  CHECK(counts[0] == doc.dep_edges.size());
  CHECK(counts[1] == doc.dep_edges.size());
  CHECK(counts[2] == doc.tokens.size());
  for (const auto& e : g.edges) {
    if (e.relation != 0) continue;
    const bool is_dep = std::any_of(doc.dep_edges.begin(), doc.dep_edges.end(),
                                    [&](const DependencyEdge& d) { return d.head == e.src && d.dependent == e.dst; });
    CHECK(is_dep);
  }
  LabeledGraph unexpanded = dependency_graph(doc);
  CHECK_THROWS_AS(collapse_syntactic_labels(unexpanded), ValidationError);
}

TEST_CASE("temporal graph uses eleven parameter classes") {
  const auto& names = temporal_relation_names();
  REQUIRE(names.size() == 11);
  CHECK(names.back() == "⊤");
  CHECK(std::count_if(names.begin(), names.end(), [](const std::string& s) {
          return s.size() > 3 && s.substr(s.size() - 3) == "^-1";
        }) == 5);

  const auto g = build_temporal_graph(small_doc());
  CHECK(g.dct == 0);
  CHECK(g.node_tokens[0].empty());
  CHECK(g.node_tokens[1] == std::vector<std::size_t>{2});
  CHECK(g.relations.edges.size() == 2 * 2 + 3);
  // The event -> DCT edge reaches the DCT as IS_INCLUDED and comes back as its inverse.
  const auto is_included = std::find(names.begin(), names.end(), "IS_INCLUDED") - names.begin();
  const auto is_included_inv = std::find(names.begin(), names.end(), "IS_INCLUDED^-1") - names.begin();
  CHECK(std::count(g.relations.edges.begin(), g.relations.edges.end(),
                   RelationEdge{1, 0, static_cast<std::size_t>(is_included)}) == 1);
  CHECK(std::count(g.relations.edges.begin(), g.relations.edges.end(),
                   RelationEdge{0, 1, static_cast<std::size_t>(is_included_inv)}) == 1);
}

TEST_CASE("permuting nodes commutes with expansion") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    const auto g = oracle::random_graph(n, rng() % 10, oracle::temporal_labels(), rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(permute_nodes(expand_edges(g), perm).edges == expand_edges(permute_nodes(g, perm)).edges);
  }
}

TEST_CASE("truncation drops what no longer fits") {
  const auto doc = offset_document("t", 1995, 4, TemporalRelation::After, 1).doc;
  REQUIRE(doc.tokens.size() > 12);
  const auto cut = truncate(doc, 12);
  CHECK_NOTHROW(validate(cut));
  CHECK(cut.tokens.size() == 12);
  CHECK(cut.sentences.size() == 2);
  CHECK(cut.sentences[1].end == 12);
  CHECK(cut.temporal_nodes.size() == doc.temporal_nodes.size());
  const auto tiny = truncate(doc, 2);
  CHECK_NOTHROW(validate(tiny));
  CHECK(tiny.temporal_nodes.size() == 1);  // only the DCT is left
  CHECK(tiny.temporal_edges.empty());
  CHECK_FALSE(tiny.has_year_mention);
  CHECK(truncate(doc, 1000) == doc);
  CHECK_THROWS_AS(truncate(doc, 0), ConfigError);
}
