// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ndater {

struct ScoredDocument {
  int predicted_year = 0;
  int gold_year = 0;
  bool has_year_mention = false;
};

struct EvalReport {
  int start_year = 0;
  int end_year = 0;
  std::size_t documents = 0;
  std::size_t with_mention = 0;
  std::size_t without_mention = 0;
  double accuracy = 0.0;
  double mean_abs_deviation_years = 0.0;
  // An empty stratum reports 0 accuracy; its count says so.
  double accuracy_with_time_mention = 0.0;
  double accuracy_without_time_mention = 0.0;
  // confusion[gold][predicted], indexed by year - start_year.
  std::vector<std::vector<std::size_t>> confusion;
};

// Scores predictions against gold years. Years outside [start_year, end_year]
// raise IndexError.
EvalReport score_predictions(const std::vector<ScoredDocument>& docs, int start_year, int end_year);

std::string report_to_json(const EvalReport& report);

// One fixed-width line per report, preceded by a header line.
std::string report_table(const std::vector<std::string>& names, const std::vector<EvalReport>& reports);

}  // namespace ndater
