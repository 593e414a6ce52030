// SPDX-License-Identifier: Apache-2.0
#include <regex>

#include "ndater/synthetic.hpp"

namespace ndater {

namespace {

class YearResolver {
 public:
  YearResolver(const AnnotatedDocument& doc, YearWindow window) : doc_(doc), window_(window) {}

  std::optional<int> time_of(std::size_t node, int depth = 0) const {
    if (depth > 16) return std::nullopt;
    const auto& n = doc_.temporal_nodes[node];
    if (n.kind == NodeKind::Timex) return timex_year(node, depth);
    if (n.kind == NodeKind::Event) {
      std::optional<int> found;
      for (const auto& e : doc_.temporal_edges) {
        std::optional<std::size_t> other;
        if (e.src == node && (e.relation == TemporalRelation::IsIncluded || e.relation == TemporalRelation::Same)) other = e.dst;
        if (e.dst == node && (e.relation == TemporalRelation::Includes || e.relation == TemporalRelation::Same)) other = e.src;
        if (!other || doc_.temporal_nodes[*other].kind != NodeKind::Timex) continue;
        if (!merge(found, time_of(*other, depth + 1))) return std::nullopt;
      }
      return found;
    }
    return std::nullopt;
  }

  std::optional<int> dct_year() const {
    std::optional<int> found;
    for (std::size_t i = 0; i < doc_.temporal_nodes.size(); ++i) {
      if (doc_.temporal_nodes[i].kind != NodeKind::Dct) continue;
      for (const auto& e : doc_.temporal_edges) {
        std::optional<std::size_t> other;
        if (e.dst == i && (e.relation == TemporalRelation::IsIncluded || e.relation == TemporalRelation::Same)) other = e.src;
        if (e.src == i && (e.relation == TemporalRelation::Includes || e.relation == TemporalRelation::Same)) other = e.dst;
        if (!other) continue;
        if (!merge(found, time_of(*other))) return std::nullopt;
      }
    }
    return found;
  }

 private:
  // False on conflict. A missing candidate leaves `acc` untouched.
  static bool merge(std::optional<int>& acc, std::optional<int> candidate) {
    if (!candidate) return true;
    if (acc && *acc != *candidate) return false;
    acc = candidate;
    return true;
  }

  std::optional<int> timex_year(std::size_t node, int depth) const {
    const auto& value = doc_.temporal_nodes[node].value;
    if (!value) return std::nullopt;
    static const std::regex absolute(R"(^(\d{4})(-.*)?$)");
    static const std::regex two_digit(R"(^XX(\d{2})$)");
    static const std::regex offset(R"(^P(\d+)Y$)");
    std::smatch m;
    if (std::regex_match(*value, m, absolute)) return std::stoi(m[1]);
    if (std::regex_match(*value, m, two_digit)) {
      const int suffix = std::stoi(m[1]);
      std::optional<int> year;
      for (int y = window_.first; y <= window_.last; ++y) {
        if (((y % 100) + 100) % 100 != suffix) continue;
        if (year) return std::nullopt;  // ambiguous inside the window
        year = y;
      }
      return year;
    }
    if (std::regex_match(*value, m, offset)) {
      const int k = std::stoi(m[1]);
      std::optional<int> found;
      for (const auto& e : doc_.temporal_edges) {
        if (e.src != node || doc_.temporal_nodes[e.dst].kind != NodeKind::Timex) continue;
        const auto anchor = time_of(e.dst, depth + 1);
        if (!anchor) continue;
        std::optional<int> year;
        if (e.relation == TemporalRelation::After) year = *anchor + k;
        if (e.relation == TemporalRelation::Before) year = *anchor - k;
        if (e.relation == TemporalRelation::Same && k == 0) year = *anchor;
        if (!merge(found, year)) return std::nullopt;
      }
      return found;
    }
    return std::nullopt;
  }

  const AnnotatedDocument& doc_;
  YearWindow window_;
};

}  // namespace

std::optional<int> derive_dct_year(const AnnotatedDocument& doc, YearWindow window) {
  return YearResolver(doc, window).dct_year();
}

}  // namespace ndater
