// SPDX-License-Identifier: Apache-2.0
#include "ndater/document.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "ndater/errors.hpp"

namespace ndater {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Event: return "EVENT";
    case NodeKind::Timex: return "TIMEX";
    case NodeKind::Dct: return "DCT";
  }
  return "?";
}

std::string_view to_string(TemporalRelation rel) {
  switch (rel) {
    case TemporalRelation::After: return "AFTER";
    case TemporalRelation::Before: return "BEFORE";
    case TemporalRelation::Same: return "SAME";
    case TemporalRelation::Includes: return "INCLUDES";
    case TemporalRelation::IsIncluded: return "IS_INCLUDED";
  }
  return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "EVENT") return NodeKind::Event;
  if (s == "TIMEX") return NodeKind::Timex;
  if (s == "DCT") return NodeKind::Dct;
  return std::nullopt;
}

std::optional<TemporalRelation> parse_temporal_relation(std::string_view s) {
  for (auto rel : kTemporalRelations) {
    if (to_string(rel) == s) return rel;
  }
  return std::nullopt;
}

bool compute_has_year_mention(const AnnotatedDocument& doc) {
  for (const auto& node : doc.temporal_nodes) {
    if (node.kind != NodeKind::Timex || !node.value) continue;
    int run = 0;
    for (char c : *node.value) {
      run = std::isdigit(static_cast<unsigned char>(c)) ? run + 1 : 0;
      if (run >= 4) return true;
    }
  }
  return false;
}

namespace {

[[noreturn]] void fail(const std::string& doc_id, const std::string& field, const std::string& what) {
  throw FieldError(doc_id, field, what);
}

std::string idx(const char* name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; }

}  // namespace

void validate(const AnnotatedDocument& doc) {
  const std::size_t n = doc.tokens.size();
  const auto& id = doc.doc_id;
  if (id.empty()) fail(id, "doc_id", "must be non-empty");
  if (n == 0) fail(id, "tokens", "document has no tokens");

  // Sentences must tile [0, n) in order.
  if (doc.sentences.empty()) fail(id, "sentences", "no sentences");
  std::size_t expected = 0;
  std::vector<std::size_t> sentence_of(n, 0);
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& span = doc.sentences[s];
    if (span.begin != expected) {
      fail(id, idx("sentences", s), "starts at " + std::to_string(span.begin) + ", expected " +
                                        std::to_string(expected) + " (ranges must partition the tokens)");
    }
    if (span.empty()) fail(id, idx("sentences", s), "empty range");
    if (span.end > n) fail(id, idx("sentences", s), "end " + std::to_string(span.end) + " exceeds token count");
    for (std::size_t t = span.begin; t < span.end; ++t) sentence_of[t] = s;
    expected = span.end;
  }
  if (expected != n) fail(id, "sentences", "ranges cover " + std::to_string(expected) + " of " + std::to_string(n) + " tokens");

  for (std::size_t e = 0; e < doc.dep_edges.size(); ++e) {
    const auto& d = doc.dep_edges[e];
    if (d.head >= n || d.dependent >= n) fail(id, idx("dep_edges", e), "token index out of range");
    if (d.label.empty()) fail(id, idx("dep_edges", e), "empty label");
    if (d.label == kSelfLoopLabel) fail(id, idx("dep_edges", e), "label ⊤ is reserved for self-loops");
    if (sentence_of[d.head] != sentence_of[d.dependent]) fail(id, idx("dep_edges", e), "crosses a sentence boundary");
  }

  std::size_t dct_count = 0;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < doc.temporal_nodes.size(); ++i) {
    const auto& node = doc.temporal_nodes[i];
    const auto field = idx("temporal_nodes", i);
    if (node.id.empty()) fail(id, field + ".id", "empty id");
    if (!seen_ids.insert(node.id).second) fail(id, field + ".id", "duplicate id '" + node.id + "'");
    if (node.kind == NodeKind::Dct) {
      ++dct_count;
      if (!node.span.empty() || node.span.begin != 0) fail(id, field + ".span", "DCT span must be empty");
    } else {
      if (node.span.empty()) fail(id, field + ".span", "EVENT/TIMEX span must be non-empty");
      if (node.span.end > n) fail(id, field + ".span", "span end exceeds token count");
    }
    if (node.value && node.kind != NodeKind::Timex) fail(id, field + ".value", "only TIMEX nodes carry a value");
  }
  if (dct_count != 1) fail(id, "temporal_nodes", "expected exactly one DCT node, found " + std::to_string(dct_count));

  for (std::size_t e = 0; e < doc.temporal_edges.size(); ++e) {
    const auto& t = doc.temporal_edges[e];
    if (t.src >= doc.temporal_nodes.size() || t.dst >= doc.temporal_nodes.size()) {
      fail(id, idx("temporal_edges", e), "node index out of range");
    }
  }
}

std::size_t dct_index(const AnnotatedDocument& doc) {
  for (std::size_t i = 0; i < doc.temporal_nodes.size(); ++i) {
    if (doc.temporal_nodes[i].kind == NodeKind::Dct) return i;
  }
  throw ValidationError("document '" + doc.doc_id + "' has no DCT node");
}

AnnotatedDocument truncate(const AnnotatedDocument& doc, std::size_t max_tokens) {
  if (max_tokens == 0) throw ConfigError("max_tokens must be positive");
  if (doc.tokens.size() <= max_tokens) return doc;
  AnnotatedDocument out;
  out.doc_id = doc.doc_id;
  out.gold_year = doc.gold_year;
  out.tokens.assign(doc.tokens.begin(), doc.tokens.begin() + static_cast<std::ptrdiff_t>(max_tokens));
  for (const auto& s : doc.sentences) {
    if (s.begin >= max_tokens) break;
    out.sentences.push_back({s.begin, std::min(s.end, max_tokens)});
  }
  for (const auto& d : doc.dep_edges) {
    if (d.head < max_tokens && d.dependent < max_tokens) out.dep_edges.push_back(d);
  }
  std::vector<std::optional<std::size_t>> remap(doc.temporal_nodes.size());
  for (std::size_t i = 0; i < doc.temporal_nodes.size(); ++i) {
    const auto& node = doc.temporal_nodes[i];
    if (node.kind == NodeKind::Dct || node.span.end <= max_tokens) {
      remap[i] = out.temporal_nodes.size();
      out.temporal_nodes.push_back(node);
    }
  }
  for (const auto& e : doc.temporal_edges) {
    if (remap[e.src] && remap[e.dst]) out.temporal_edges.push_back({*remap[e.src], *remap[e.dst], e.relation});
  }
  out.has_year_mention = compute_has_year_mention(out);
  return out;
}

LabeledGraph expand_edges(const LabeledGraph& graph) {
  if (graph.expanded) throw ValidationError("expand_edges: graph is already expanded");
  if (graph.node_count == 0) throw ValidationError("expand_edges: graph has no nodes");
  std::set<std::tuple<std::size_t, std::size_t, std::string>> originals;
  for (const auto& e : graph.edges) {
    if (e.src >= graph.node_count || e.dst >= graph.node_count) {
      throw ValidationError("expand_edges: edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                            ") has an endpoint outside [0, " + std::to_string(graph.node_count) + ")");
    }
    if (e.direction != EdgeDirection::Forward || e.label == kSelfLoopLabel) {
      throw ValidationError("expand_edges: input edges must be forward edges with ordinary labels");
    }
    originals.emplace(e.src, e.dst, e.label);
  }
  LabeledGraph out;
  out.node_count = graph.node_count;
  out.expanded = true;
  out.edges.reserve(2 * originals.size() + graph.node_count);
  for (const auto& [u, v, label] : originals) {
    out.edges.push_back({u, v, label, EdgeDirection::Forward});
    out.edges.push_back({v, u, label, EdgeDirection::Inverse});
  }
  for (std::size_t u = 0; u < graph.node_count; ++u) {
    out.edges.push_back({u, u, std::string(kSelfLoopLabel), EdgeDirection::SelfLoop});
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

namespace {

void require_self_loops(const LabeledGraph& g, const char* op) {
  std::vector<int> loops(g.node_count, 0);
  for (const auto& e : g.edges) {
    if (e.direction == EdgeDirection::SelfLoop) {
      if (e.src != e.dst || e.src >= g.node_count) throw ValidationError(std::string(op) + ": malformed self-loop");
      ++loops[e.src];
    }
  }
  for (std::size_t u = 0; u < g.node_count; ++u) {
    if (loops[u] != 1) {
      throw ValidationError(std::string(op) + ": node " + std::to_string(u) +
                            " does not have exactly one ⊤ self-loop (graph not expanded?)");
    }
  }
}

}  // namespace

const std::vector<std::string>& syntactic_relation_names() {
  static const std::vector<std::string> names = {"→", "←", std::string(kSelfLoopLabel)};
  return names;
}

RelationGraph collapse_syntactic_labels(const LabeledGraph& expanded) {
  require_self_loops(expanded, "collapse_syntactic_labels");
  RelationGraph out;
  out.node_count = expanded.node_count;
  out.relations = syntactic_relation_names();
  out.edges.reserve(expanded.edges.size());
  for (const auto& e : expanded.edges) {
    SyntacticEdgeType t = SyntacticEdgeType::SelfLoop;
    if (e.direction == EdgeDirection::Forward) t = SyntacticEdgeType::Forward;
    if (e.direction == EdgeDirection::Inverse) t = SyntacticEdgeType::Backward;
    out.edges.push_back({e.src, e.dst, static_cast<std::size_t>(t)});
  }
  return out;
}

const std::vector<std::string>& temporal_relation_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (auto rel : kTemporalRelations) v.emplace_back(to_string(rel));
    for (auto rel : kTemporalRelations) v.push_back(std::string(to_string(rel)) + "^-1");
    v.emplace_back(kSelfLoopLabel);
    return v;
  }();
  return names;
}

RelationGraph to_relation_graph(const LabeledGraph& expanded, const std::vector<std::string>& relations) {
  require_self_loops(expanded, "to_relation_graph");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < relations.size(); ++i) index.emplace(relations[i], i);
  RelationGraph out;
  out.node_count = expanded.node_count;
  out.relations = relations;
  out.edges.reserve(expanded.edges.size());
  for (const auto& e : expanded.edges) {
    std::string key = e.direction == EdgeDirection::SelfLoop  ? std::string(kSelfLoopLabel)
                      : e.direction == EdgeDirection::Inverse ? e.label + "^-1"
                                                              : e.label;
    auto it = index.find(key);
    if (it == index.end()) throw ConfigError("to_relation_graph: relation '" + key + "' has no parameter class");
    out.edges.push_back({e.src, e.dst, it->second});
  }
  return out;
}

LabeledGraph dependency_graph(const AnnotatedDocument& doc) {
  LabeledGraph g;
  g.node_count = doc.tokens.size();
  g.edges.reserve(doc.dep_edges.size());
  for (const auto& d : doc.dep_edges) g.edges.push_back({d.head, d.dependent, d.label, EdgeDirection::Forward});
  return g;
}

TemporalGraph build_temporal_graph(const AnnotatedDocument& doc) {
  TemporalGraph out;
  std::size_t dct_count = 0;
  for (std::size_t i = 0; i < doc.temporal_nodes.size(); ++i) {
    const auto& node = doc.temporal_nodes[i];
    if (node.kind == NodeKind::Dct) {
      out.dct = i;
      ++dct_count;
      out.node_tokens.emplace_back();
    } else {
      std::vector<std::size_t> rows(node.span.length());
      std::iota(rows.begin(), rows.end(), node.span.begin);
      out.node_tokens.push_back(std::move(rows));
    }
  }
  if (dct_count != 1) {
    throw ValidationError("document '" + doc.doc_id + "': temporal graph needs exactly one DCT node, found " +
                          std::to_string(dct_count));
  }
  LabeledGraph raw;
  raw.node_count = doc.temporal_nodes.size();
  for (const auto& e : doc.temporal_edges) {
    raw.edges.push_back({e.src, e.dst, std::string(to_string(e.relation)), EdgeDirection::Forward});
  }
  out.expanded = expand_edges(raw);
  out.relations = to_relation_graph(out.expanded, temporal_relation_names());
  return out;
}

LabeledGraph permute_nodes(const LabeledGraph& graph, const std::vector<std::size_t>& perm) {
  if (perm.size() != graph.node_count) throw ValidationError("permute_nodes: permutation size mismatch");
  LabeledGraph out = graph;
  for (auto& e : out.edges) {
    e.src = perm.at(e.src);
    e.dst = perm.at(e.dst);
  }
  if (out.expanded) std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace ndater
