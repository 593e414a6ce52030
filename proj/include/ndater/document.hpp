// SPDX-License-Identifier: Apache-2.0
//
// Annotated documents and the graphs derived from them: the dependency graph
// over tokens and the temporal graph over events, time expressions and the
// document creation time (DCT).
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ndater {

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t length() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool operator==(const TokenSpan&) const = default;
};

enum class NodeKind { Event, Timex, Dct };

enum class TemporalRelation { After, Before, Same, Includes, IsIncluded };

inline constexpr std::array<TemporalRelation, 5> kTemporalRelations = {
    TemporalRelation::After, TemporalRelation::Before, TemporalRelation::Same, TemporalRelation::Includes,
    TemporalRelation::IsIncluded};

std::string_view to_string(NodeKind kind);
std::string_view to_string(TemporalRelation rel);
std::optional<NodeKind> parse_node_kind(std::string_view s);
// Exact match on the five upper-case names; anything else is not kept.
std::optional<TemporalRelation> parse_temporal_relation(std::string_view s);

struct TemporalNode {
  std::string id;
  NodeKind kind = NodeKind::Event;
  TokenSpan span;
  std::optional<std::string> value;  // normalized date, TIMEX only

  bool operator==(const TemporalNode&) const = default;
};

struct DependencyEdge {
  std::size_t head = 0;
  std::size_t dependent = 0;
  std::string label;

  bool operator==(const DependencyEdge&) const = default;
};

// Endpoints index into AnnotatedDocument::temporal_nodes.
struct TemporalEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  TemporalRelation relation = TemporalRelation::Same;

  bool operator==(const TemporalEdge&) const = default;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<TokenSpan> sentences;
  std::vector<DependencyEdge> dep_edges;
  std::vector<TemporalNode> temporal_nodes;
  std::vector<TemporalEdge> temporal_edges;
  std::optional<int> gold_year;
  bool has_year_mention = false;

  bool operator==(const AnnotatedDocument&) const = default;
};

// True when some TIMEX value contains four consecutive digits.
bool compute_has_year_mention(const AnnotatedDocument& doc);

// Checks every structural invariant; throws ValidationError naming the field.
void validate(const AnnotatedDocument& doc);

// Index of the single DCT node (validation guarantees there is one).
std::size_t dct_index(const AnnotatedDocument& doc);

// Keeps the first `max_tokens` tokens. Sentences, dependency edges and
// temporal nodes that no longer fit are removed, along with their edges.
AnnotatedDocument truncate(const AnnotatedDocument& doc, std::size_t max_tokens);

// ---------------------------------------------------------------------------
// Labeled graphs and edge-set expansion

enum class EdgeDirection { Forward, Inverse, SelfLoop };

inline constexpr std::string_view kSelfLoopLabel = "⊤";

struct LabeledEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::string label;
  EdgeDirection direction = EdgeDirection::Forward;

  auto operator<=>(const LabeledEdge&) const = default;
};

struct LabeledGraph {
  std::size_t node_count = 0;
  std::vector<LabeledEdge> edges;
  bool expanded = false;
};

// Adds one inverse edge per (deduplicated) original edge and one ⊤ self-loop
// per node; output sorted by (src, dst, label, direction).
// |E'| = 2 |E_dedup| + |V|.
LabeledGraph expand_edges(const LabeledGraph& graph);

// Graph over a closed relation vocabulary, as consumed by the GCN layers.
// Node v aggregates over the edges whose dst is v.
struct RelationEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t relation = 0;

  auto operator<=>(const RelationEdge&) const = default;
};

struct RelationGraph {
  std::size_t node_count = 0;
  std::vector<std::string> relations;
  std::vector<RelationEdge> edges;
};

enum class SyntacticEdgeType { Forward = 0, Backward = 1, SelfLoop = 2 };

// Parameter-class names of the collapsed syntactic relations: "→", "←", "⊤".
const std::vector<std::string>& syntactic_relation_names();

// Maps forward edges to →, inverse edges to ←, self-loops to ⊤. Rejects a
// graph in which any node lacks its self-loop.
RelationGraph collapse_syntactic_labels(const LabeledGraph& expanded);

// Names of the 11 temporal parameter classes: the five relations, their five
// inverses (suffix "^-1") and ⊤.
const std::vector<std::string>& temporal_relation_names();

// Maps each expanded edge to its label-and-direction class within `relations`.
RelationGraph to_relation_graph(const LabeledGraph& expanded, const std::vector<std::string>& relations);

// Dependency edges of the document as a graph over its tokens (unexpanded).
LabeledGraph dependency_graph(const AnnotatedDocument& doc);

struct TemporalGraph {
  LabeledGraph expanded;
  RelationGraph relations;
  // Token rows used to initialize each node; empty for the DCT.
  std::vector<std::vector<std::size_t>> node_tokens;
  std::size_t dct = 0;
};

TemporalGraph build_temporal_graph(const AnnotatedDocument& doc);

// Applies a node permutation (new_id = perm[old_id]) to every edge.
LabeledGraph permute_nodes(const LabeledGraph& graph, const std::vector<std::size_t>& perm);

}  // namespace ndater
