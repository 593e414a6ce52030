// SPDX-License-Identifier: Apache-2.0
#include "ndater/annotation_io.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace ndater {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

class RecordReader {
 public:
  RecordReader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw AnnotationError(line_, field, what);
  }

  const json& require(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(key, "missing required field");
    return *it;
  }

  std::size_t index(const json& v, const std::string& field) const {
    if (!v.is_number_integer()) fail(field, "expected a non-negative integer");
    if (v.get<long long>() < 0) fail(field, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  std::string string(const json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& field, std::optional<std::size_t> size = {}) const {
    if (!v.is_array()) fail(field, "expected an array");
    if (size && v.size() != *size) fail(field, "expected " + std::to_string(*size) + " elements");
    return v;
  }

  TokenSpan span(const json& v, const std::string& field) const {
    array(v, field, 2);
    TokenSpan s{index(v[0], field + "[0]"), index(v[1], field + "[1]")};
    if (s.end < s.begin) fail(field, "end precedes start");
    return s;
  }

 private:
  std::size_t line_;
};

std::string at(const char* name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; }

}  // namespace

AnnotatedDocument parse_annotation(std::string_view line, std::size_t line_no, IngestStats* stats) {
  RecordReader r(line_no);
  json root;
  try {
    root = json::parse(line);
  } catch (const json::parse_error& e) {
    r.fail("record", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) r.fail("record", "expected a JSON object");

  static const std::set<std::string> allowed = {"doc_id",         "tokens",         "sentences", "dep_edges",
                                                "temporal_nodes", "temporal_edges", "gold_year"};
  for (const auto& [key, _] : root.items()) {
    if (!allowed.contains(key)) r.fail(key, "unknown field");
  }

  AnnotatedDocument doc;
  doc.doc_id = r.string(r.require(root, "doc_id"), "doc_id");

  const auto& tokens = r.array(r.require(root, "tokens"), "tokens");
  for (std::size_t i = 0; i < tokens.size(); ++i) doc.tokens.push_back(r.string(tokens[i], at("tokens", i)));

  const auto& sentences = r.array(r.require(root, "sentences"), "sentences");
  for (std::size_t i = 0; i < sentences.size(); ++i) doc.sentences.push_back(r.span(sentences[i], at("sentences", i)));

  const auto& deps = r.array(r.require(root, "dep_edges"), "dep_edges");
  for (std::size_t i = 0; i < deps.size(); ++i) {
    const auto f = at("dep_edges", i);
    const auto& e = r.array(deps[i], f, 3);
    doc.dep_edges.push_back({r.index(e[0], f + "[0]"), r.index(e[1], f + "[1]"), r.string(e[2], f + "[2]")});
  }

  std::unordered_map<std::string, std::size_t> node_index;
  const auto& nodes = r.array(r.require(root, "temporal_nodes"), "temporal_nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto f = at("temporal_nodes", i);
    const auto& n = nodes[i];
    if (!n.is_object()) r.fail(f, "expected an object");
    for (const auto& [key, _] : n.items()) {
      if (key != "id" && key != "kind" && key != "span" && key != "value") r.fail(f + "." + key, "unknown field");
    }
    TemporalNode node;
    node.id = r.string(r.require(n, "id"), f + ".id");
    const auto kind_name = r.string(r.require(n, "kind"), f + ".kind");
    const auto kind = parse_node_kind(kind_name);
    if (!kind) r.fail(f + ".kind", "unknown node kind '" + kind_name + "'");
    node.kind = *kind;
    node.span = r.span(r.require(n, "span"), f + ".span");
    if (auto it = n.find("value"); it != n.end()) node.value = r.string(*it, f + ".value");
    if (!node_index.emplace(node.id, i).second) r.fail(f + ".id", "duplicate node id '" + node.id + "'");
    doc.temporal_nodes.push_back(std::move(node));
  }

  const auto& edges = r.array(r.require(root, "temporal_edges"), "temporal_edges");
  IngestStats local;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto f = at("temporal_edges", i);
    const auto& e = r.array(edges[i], f, 3);
    const auto src = r.string(e[0], f + "[0]");
    const auto dst = r.string(e[1], f + "[1]");
    const auto rel_name = r.string(e[2], f + "[2]");
    auto s = node_index.find(src);
    auto d = node_index.find(dst);
    if (s == node_index.end()) r.fail(f + "[0]", "unknown node id '" + src + "'");
    if (d == node_index.end()) r.fail(f + "[1]", "unknown node id '" + dst + "'");
    const auto rel = parse_temporal_relation(rel_name);
    if (!rel) {
      ++local.dropped_relations[rel_name];
      continue;
    }
    doc.temporal_edges.push_back({s->second, d->second, *rel});
  }

  if (auto it = root.find("gold_year"); it != root.end()) {
    if (!it->is_number_integer()) r.fail("gold_year", "expected an integer year");
    doc.gold_year = it->get<int>();
  }
  doc.has_year_mention = compute_has_year_mention(doc);

  try {
    validate(doc);
  } catch (const FieldError& e) {
    r.fail(e.field, e.detail);
  }
  local.documents = 1;
  if (stats) stats->merge(local);
  return doc;
}

std::string serialize_annotation(const AnnotatedDocument& doc) {
  ordered_json j;
  j["doc_id"] = doc.doc_id;
  j["tokens"] = doc.tokens;
  j["sentences"] = ordered_json::array();
  for (const auto& s : doc.sentences) j["sentences"].push_back({s.begin, s.end});
  j["dep_edges"] = ordered_json::array();
  for (const auto& d : doc.dep_edges) j["dep_edges"].push_back({d.head, d.dependent, d.label});
  j["temporal_nodes"] = ordered_json::array();
  for (const auto& n : doc.temporal_nodes) {
    ordered_json node;
    node["id"] = n.id;
    node["kind"] = std::string(to_string(n.kind));
    node["span"] = {n.span.begin, n.span.end};
    if (n.value) node["value"] = *n.value;
    j["temporal_nodes"].push_back(std::move(node));
  }
  j["temporal_edges"] = ordered_json::array();
  for (const auto& e : doc.temporal_edges) {
    j["temporal_edges"].push_back(
        {doc.temporal_nodes.at(e.src).id, doc.temporal_nodes.at(e.dst).id, std::string(to_string(e.relation))});
  }
  if (doc.gold_year) j["gold_year"] = *doc.gold_year;
  return j.dump();
}

std::vector<AnnotatedDocument> read_annotation_file(const std::string& path, IngestStats* stats) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open annotation file '" + path + "'");
  std::vector<AnnotatedDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    docs.push_back(parse_annotation(line, line_no, stats));
  }
  return docs;
}

void write_annotation_file(const std::string& path, const std::vector<AnnotatedDocument>& docs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  for (const auto& d : docs) out << serialize_annotation(d) << '\n';
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

}  // namespace ndater
