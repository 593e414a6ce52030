// SPDX-License-Identifier: Apache-2.0
//
// Template corpus whose publication year can only be recovered by composing
// temporal relations: an anchor year Y, an offset "k years after/before" tied
// to it, and an event inside that offset which the DCT includes. The gold
// year is Y + k or Y - k. Edges per clause:
//   offset -AFTER|BEFORE|SAME-> anchor, event -IS_INCLUDED-> offset,
//   event -AFTER|BEFORE-> anchor (IS_INCLUDED when k = 0),
//   event -IS_INCLUDED-> DCT for the clause that dates the document.
//
// In hard documents a second, structurally identical clause with a different
// anchor and event (not linked to the DCT) is added in random order, so the
// surface text alone cannot tell which clause dates the document.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndater/document.hpp"

namespace ndater {

enum class Difficulty { Easy, Hard };

std::string_view to_string(Difficulty d);
std::optional<Difficulty> parse_difficulty(std::string_view s);

struct SyntheticOptions {
  std::size_t n_docs = 200;
  int start_year = 1995;
  int end_year = 1999;
  std::uint64_t seed = 1;
  Difficulty difficulty = Difficulty::Easy;
  // Share of documents whose anchors are written as two-digit years ('95),
  // normalized "XX95", which do not count as year mentions.
  double no_mention_fraction = 0.15;
  int max_offset = 4;
};

struct SyntheticDocument {
  AnnotatedDocument doc;
  std::string derivation;  // e.g. "1995 AFTER +4 = 1999"
};

// Throws ConfigError when the range spans fewer than three years.
std::vector<SyntheticDocument> generate_synthetic_corpus(const SyntheticOptions& options);

// One document built from a single offset clause ("... approved the law four
// years after 1995 ."), with filler text drawn from `seed`. relation is AFTER,
// BEFORE or SAME (offset 0).
SyntheticDocument offset_document(const std::string& doc_id, int anchor_year, int offset, TemporalRelation relation,
                                  std::uint64_t seed, bool two_digit_anchor = false);

// Anchor years that two-digit values ("XX95") may resolve to.
struct YearWindow {
  int first = 0;
  int last = 0;
};

// Re-derives the DCT year from temporal nodes and edges alone:
//   anchor TIMEX value "YYYY" (or "XXyy" resolved inside `window`);
//   offset TIMEX value "PkY" related to an anchor by AFTER (+k), BEFORE (-k)
//   or SAME (k = 0);
//   EVENT IS_INCLUDED / SAME a TIMEX takes its year;
//   an EVENT or TIMEX IS_INCLUDED in / SAME as the DCT dates the document.
// Returns nullopt when no consistent year follows.
std::optional<int> derive_dct_year(const AnnotatedDocument& doc, YearWindow window);

}  // namespace ndater
