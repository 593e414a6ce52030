// SPDX-License-Identifier: Apache-2.0
//
// Annotation files hold one JSON document per line:
//
//   {"doc_id": str, "tokens": [str], "sentences": [[start, end]],
//    "dep_edges": [[head, dependent, label]],
//    "temporal_nodes": [{"id": str, "kind": "EVENT"|"TIMEX"|"DCT",
//                        "span": [start, end], "value"?: str}],
//    "temporal_edges": [[src_id, dst_id, RELATION]], "gold_year"?: int}
//
// Ranges are half-open. The schema ships as schemas/annotation.schema.json.
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ndater/document.hpp"
#include "ndater/errors.hpp"

namespace ndater {

// Carries the 1-based line number and the offending field.
struct AnnotationError : ValidationError {
  AnnotationError(std::size_t line, std::string field, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + field + ": " + what),
        line(line),
        field(std::move(field)) {}
  std::size_t line;
  std::string field;
};

// Temporal relations outside the five kept types, counted by name.
struct IngestStats {
  std::map<std::string, std::size_t> dropped_relations;
  std::size_t documents = 0;

  std::size_t dropped_total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : dropped_relations) n += c;
    return n;
  }
  void merge(const IngestStats& other) {
    documents += other.documents;
    for (const auto& [k, c] : other.dropped_relations) dropped_relations[k] += c;
  }
};

// Parses and validates one record. Unknown keys, wrong types and invariant
// violations throw AnnotationError; relations outside the kept five are
// dropped and counted in `stats`.
AnnotatedDocument parse_annotation(std::string_view line, std::size_t line_no = 1, IngestStats* stats = nullptr);

// Canonical single-line serialization (no trailing newline).
std::string serialize_annotation(const AnnotatedDocument& doc);

std::vector<AnnotatedDocument> read_annotation_file(const std::string& path, IngestStats* stats = nullptr);
void write_annotation_file(const std::string& path, const std::vector<AnnotatedDocument>& docs);

}  // namespace ndater
