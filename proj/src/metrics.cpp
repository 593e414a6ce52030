// SPDX-License-Identifier: Apache-2.0
#include "ndater/metrics.hpp"

#include <cstdio>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "ndater/errors.hpp"

namespace ndater {

EvalReport score_predictions(const std::vector<ScoredDocument>& docs, int start_year, int end_year) {
  if (end_year < start_year) throw ConfigError("score_predictions: empty year range");
  const auto classes = static_cast<std::size_t>(end_year - start_year + 1);
  EvalReport r;
  r.start_year = start_year;
  r.end_year = end_year;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0, correct_with = 0, correct_without = 0;
  double deviation = 0.0;
  for (const auto& d : docs) {
    for (int y : {d.gold_year, d.predicted_year}) {
      if (y < start_year || y > end_year) {
        throw IndexError("year " + std::to_string(y) + " outside [" + std::to_string(start_year) + ", " +
                         std::to_string(end_year) + "]");
      }
    }
    const bool hit = d.predicted_year == d.gold_year;
    ++r.documents;
    correct += hit;
    deviation += std::abs(d.predicted_year - d.gold_year);
    if (d.has_year_mention) {
      ++r.with_mention;
      correct_with += hit;
    } else {
      ++r.without_mention;
      correct_without += hit;
    }
    ++r.confusion[static_cast<std::size_t>(d.gold_year - start_year)][static_cast<std::size_t>(d.predicted_year - start_year)];
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  r.accuracy = ratio(correct, r.documents);
  r.mean_abs_deviation_years = r.documents ? deviation / static_cast<double>(r.documents) : 0.0;
  r.accuracy_with_time_mention = ratio(correct_with, r.with_mention);
  r.accuracy_without_time_mention = ratio(correct_without, r.without_mention);
  return r;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["start_year"] = r.start_year;
  j["end_year"] = r.end_year;
  j["documents"] = r.documents;
  j["accuracy"] = r.accuracy;
  j["mean_abs_deviation_years"] = r.mean_abs_deviation_years;
  j["accuracy_with_time_mention"] = r.accuracy_with_time_mention;
  j["accuracy_without_time_mention"] = r.accuracy_without_time_mention;
  j["documents_with_time_mention"] = r.with_mention;
  j["documents_without_time_mention"] = r.without_mention;
  j["confusion"] = r.confusion;
  return j.dump();
}

std::string report_table(const std::vector<std::string>& names, const std::vector<EvalReport>& reports) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-36s %6s %9s %8s %8s %6s\n", "config", "acc", "mad_years", "acc_time", "acc_none",
                "docs");
  out += buf;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::snprintf(buf, sizeof buf, "%-36s %6.3f %9.3f %8.3f %8.3f %6zu\n", i < names.size() ? names[i].c_str() : "",
                  r.accuracy, r.mean_abs_deviation_years, r.accuracy_with_time_mention, r.accuracy_without_time_mention,
                  r.documents);
    out += buf;
  }
  return out;
}

}  // namespace ndater
