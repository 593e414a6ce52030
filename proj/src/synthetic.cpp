// SPDX-License-Identifier: Apache-2.0
#include "ndater/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>

#include "ndater/errors.hpp"

namespace ndater {

std::string_view to_string(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

std::optional<Difficulty> parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "hard") return Difficulty::Hard;
  return std::nullopt;
}

namespace {

constexpr std::array<const char*, 8> kSubjects = {"council", "ministry", "court", "union",
                                                  "senate",  "company",  "board", "committee"};
constexpr std::array<const char*, 8> kEvents = {"approved", "signed",   "announced", "rejected",
                                                "opened",   "launched", "reviewed",  "completed"};
constexpr std::array<const char*, 8> kObjects = {"treaty", "plan",   "budget", "merger",
                                                 "report", "reform", "bridge", "contract"};
constexpr std::array<const char*, 6> kNumbers = {"zero", "one", "two", "three", "four", "five"};
constexpr std::array<const char*, 6> kFillerNouns = {"officials", "residents", "analysts",
                                                     "observers", "members",   "critics"};
constexpr std::array<const char*, 6> kFillerVerbs = {"waited", "spoke", "agreed", "objected", "gathered", "listened"};
constexpr std::array<const char*, 6> kFillerAdverbs = {"quietly", "again", "briefly", "later", "openly", "early"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& pool, std::mt19937_64& rng) {
  return pool[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

struct Clause {
  int anchor_year = 0;
  int offset = 0;
  TemporalRelation relation = TemporalRelation::After;
  bool two_digit = false;
  bool dates_document = false;
  std::size_t subject = 0;
  std::size_t event = 0;
  std::size_t object = 0;
};

int derived_year(const Clause& c) {
  if (c.relation == TemporalRelation::After) return c.anchor_year + c.offset;
  if (c.relation == TemporalRelation::Before) return c.anchor_year - c.offset;
  return c.anchor_year;
}

std::string derivation_of(const Clause& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d %s %c%d = %d", c.anchor_year, std::string(to_string(c.relation)).c_str(),
                c.relation == TemporalRelation::Before ? '-' : '+', c.offset, derived_year(c));
  return buf;
}

class DocumentBuilder {
 public:
  explicit DocumentBuilder(std::string doc_id) {
    doc_.doc_id = std::move(doc_id);
    doc_.temporal_nodes.push_back({"t0", NodeKind::Dct, {0, 0}, std::nullopt});
  }

  void filler(std::mt19937_64& rng) {
    const auto base = begin_sentence();
    push("the");
    push(pick(kFillerNouns, rng));
    push(pick(kFillerVerbs, rng));
    push(pick(kFillerAdverbs, rng));
    push(".");
    dep(base + 2, base + 1, "nsubj");
    dep(base + 1, base, "det");
    dep(base + 2, base + 3, "advmod");
    dep(base + 2, base + 4, "punct");
    end_sentence(base);
  }

  // "the <subj> <event> the <obj> <offset phrase> <anchor> ."
  void clause(const Clause& c) {
    const auto base = begin_sentence();
    push("the");
    push(kSubjects[c.subject]);
    const auto verb = push(kEvents[c.event]);
    push("the");
    const auto obj = push(kObjects[c.object]);
    dep(verb, base + 1, "nsubj");
    dep(base + 1, base, "det");
    dep(verb, obj, "obj");
    dep(obj, obj - 1, "det");

    const auto offset_begin = doc_.tokens.size();
    std::size_t offset_head = 0;
    if (c.relation == TemporalRelation::Same) {
      const auto det = push("the");
      const auto same = push("same");
      offset_head = push("year");
      const auto as = push("as");
      dep(offset_head, det, "det");
      dep(offset_head, same, "amod");
      dep(offset_head, as, "case");
    } else {
      const auto number = push(kNumbers[static_cast<std::size_t>(c.offset)]);
      offset_head = push(c.offset == 1 ? "year" : "years");
      const auto dir = push(c.relation == TemporalRelation::After ? "after" : "before");
      dep(offset_head, number, "nummod");
      dep(offset_head, dir, "case");
    }
    dep(verb, offset_head, "obl");
    const auto offset_end = doc_.tokens.size();

    char anchor_text[16];
    char anchor_value[16];
    const int yy = ((c.anchor_year % 100) + 100) % 100;
    if (c.two_digit) {
      std::snprintf(anchor_text, sizeof anchor_text, "'%02d", yy);
      std::snprintf(anchor_value, sizeof anchor_value, "XX%02d", yy);
    } else {
      std::snprintf(anchor_text, sizeof anchor_text, "%d", c.anchor_year);
      std::snprintf(anchor_value, sizeof anchor_value, "%d", c.anchor_year);
    }
    const auto anchor = push(anchor_text);
    dep(verb, anchor, "obl");
    dep(verb, push("."), "punct");
    end_sentence(base);

    const auto event_node = node(NodeKind::Event, {verb, verb + 1}, std::nullopt);
    const auto offset_node =
        node(NodeKind::Timex, {offset_begin, offset_end}, "P" + std::to_string(c.offset) + "Y");
    const auto anchor_node = node(NodeKind::Timex, {anchor, anchor + 1}, std::string(anchor_value));
    doc_.temporal_edges.push_back({offset_node, anchor_node, c.relation});
    doc_.temporal_edges.push_back({event_node, offset_node, TemporalRelation::IsIncluded});
    doc_.temporal_edges.push_back(
        {event_node, anchor_node, c.relation == TemporalRelation::Same ? TemporalRelation::IsIncluded : c.relation});
    if (c.dates_document) doc_.temporal_edges.push_back({event_node, 0, TemporalRelation::IsIncluded});
  }

  AnnotatedDocument finish(int gold_year) {
    doc_.gold_year = gold_year;
    doc_.has_year_mention = compute_has_year_mention(doc_);
    validate(doc_);
    return std::move(doc_);
  }

 private:
  std::size_t begin_sentence() const { return doc_.tokens.size(); }
  void end_sentence(std::size_t base) { doc_.sentences.push_back({base, doc_.tokens.size()}); }

  std::size_t push(const char* token) {
    doc_.tokens.emplace_back(token);
    return doc_.tokens.size() - 1;
  }

  void dep(std::size_t head, std::size_t dependent, const char* label) {
    doc_.dep_edges.push_back({head, dependent, label});
  }

  std::size_t node(NodeKind kind, TokenSpan span, std::optional<std::string> value) {
    doc_.temporal_nodes.push_back({"t" + std::to_string(doc_.temporal_nodes.size()), kind, span, std::move(value)});
    return doc_.temporal_nodes.size() - 1;
  }

  AnnotatedDocument doc_;
};

// Offset clause reaching `year`, with the anchor kept within max_offset of the
// year range.
Clause clause_for(int year, int max_offset, std::mt19937_64& rng) {
  Clause c;
  c.offset = std::uniform_int_distribution<int>(0, max_offset)(rng);
  if (c.offset == 0) {
    c.relation = TemporalRelation::Same;
  } else {
    c.relation = std::bernoulli_distribution(0.5)(rng) ? TemporalRelation::After : TemporalRelation::Before;
  }
  c.anchor_year = c.relation == TemporalRelation::After ? year - c.offset : year + c.offset;
  return c;
}

void assign_words(Clause& c, std::mt19937_64& rng, const Clause* avoid) {
  auto draw = [&](std::size_t n, std::optional<std::size_t> excluded) {
    std::size_t v = 0;
    do {
      v = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    } while (excluded && v == *excluded);
    return v;
  };
  c.subject = draw(kSubjects.size(), avoid ? std::optional(avoid->subject) : std::nullopt);
  c.event = draw(kEvents.size(), avoid ? std::optional(avoid->event) : std::nullopt);
  c.object = draw(kObjects.size(), avoid ? std::optional(avoid->object) : std::nullopt);
}

}  // namespace

std::vector<SyntheticDocument> generate_synthetic_corpus(const SyntheticOptions& o) {
  if (o.end_year - o.start_year < 2) throw ConfigError("synthetic corpus needs a range of at least three years");
  if (o.max_offset < 1 || o.max_offset >= static_cast<int>(kNumbers.size())) {
    throw ConfigError("max_offset must be in [1, " + std::to_string(kNumbers.size() - 1) + "]");
  }
  if (o.no_mention_fraction < 0.0 || o.no_mention_fraction > 1.0) {
    throw ConfigError("no_mention_fraction must be in [0, 1]");
  }
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> year_dist(o.start_year, o.end_year);
  std::bernoulli_distribution two_digit_dist(o.no_mention_fraction);

  std::vector<SyntheticDocument> out;
  out.reserve(o.n_docs);
  char id[32];
  for (std::size_t i = 0; i < o.n_docs; ++i) {
    std::snprintf(id, sizeof id, "syn-%06zu", i);
    const int gold = year_dist(rng);
    const bool two_digit = two_digit_dist(rng);
    Clause truth = clause_for(gold, o.max_offset, rng);
    truth.two_digit = two_digit;
    truth.dates_document = true;
    assign_words(truth, rng, nullptr);

    DocumentBuilder b(id);
    if (std::bernoulli_distribution(0.5)(rng)) b.filler(rng);
    if (o.difficulty == Difficulty::Easy) {
      b.clause(truth);
    } else {
      int other = gold;
      while (other == gold) other = year_dist(rng);
      Clause distractor = clause_for(other, o.max_offset, rng);
      distractor.two_digit = two_digit;
      assign_words(distractor, rng, &truth);
      if (std::bernoulli_distribution(0.5)(rng)) {
        b.clause(truth);
        b.clause(distractor);
      } else {
        b.clause(distractor);
        b.clause(truth);
      }
    }
    b.filler(rng);
    out.push_back({b.finish(gold), derivation_of(truth)});
  }
  return out;
}

SyntheticDocument offset_document(const std::string& doc_id, int anchor_year, int offset, TemporalRelation relation,
                                  std::uint64_t seed, bool two_digit_anchor) {
  if (offset < 0 || offset >= static_cast<int>(kNumbers.size())) throw ConfigError("offset out of range");
  if (relation == TemporalRelation::Same && offset != 0) throw ConfigError("SAME requires offset 0");
  if (relation != TemporalRelation::Same && relation != TemporalRelation::After && relation != TemporalRelation::Before) {
    throw ConfigError("offset relation must be AFTER, BEFORE or SAME");
  }
  if (relation != TemporalRelation::Same && offset == 0) throw ConfigError("offset 0 requires SAME");
  std::mt19937_64 rng(seed);
  Clause c;
  c.anchor_year = anchor_year;
  c.offset = offset;
  c.relation = relation;
  c.two_digit = two_digit_anchor;
  c.dates_document = true;
  assign_words(c, rng, nullptr);
  DocumentBuilder b(doc_id);
  b.clause(c);
  b.filler(rng);
  return {b.finish(derived_year(c)), derivation_of(c)};
}

}  // namespace ndater
