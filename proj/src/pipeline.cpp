// SPDX-License-Identifier: Apache-2.0
#include "ndater/pipeline.hpp"

#include <cstdlib>
#include <map>

#include <nlohmann/json.hpp>

namespace ndater {

using nlohmann::ordered_json;

std::string epoch_record_json(const EpochRecord& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["dev_acc"] = r.dev_accuracy ? ordered_json(*r.dev_accuracy) : ordered_json(nullptr);
  if (r.train_accuracy) j["train_acc"] = *r.train_accuracy;
  return j.dump();
}

void require_matching_range(const ModelConfig& config, const Corpus& corpus) {
  if (config.start_year != corpus.start_year || config.end_year != corpus.end_year) {
    throw ConfigError("model years [" + std::to_string(config.start_year) + ", " + std::to_string(config.end_year) +
                      "] do not match corpus years [" + std::to_string(corpus.start_year) + ", " +
                      std::to_string(corpus.end_year) + "]");
  }
}

std::string ablation_json(const std::vector<AblationRow>& rows) {
  ordered_json out;
  out["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["config"] = ordered_json::parse(config_to_json(r.config));
    j["report"] = ordered_json::parse(report_to_json(r.report));
    j["best_epoch"] = r.training.best_epoch;
    j["epochs"] = r.training.epochs.size();
    out["rows"].push_back(std::move(j));
  }
  return out.dump();
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::vector<std::string> names;
  std::vector<EvalReport> reports;
  for (const auto& r : rows) {
    names.push_back(r.config.name);
    reports.push_back(r.report);
  }
  return report_table(names, reports);
}

std::string deviation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "config,abs_deviation_years,documents\n";
  for (const auto& r : rows) {
    std::map<int, std::size_t> histogram;
    const auto& m = r.report.confusion;
    for (std::size_t g = 0; g < m.size(); ++g) {
      for (std::size_t p = 0; p < m[g].size(); ++p) {
        if (m[g][p]) histogram[std::abs(static_cast<int>(g) - static_cast<int>(p))] += m[g][p];
      }
    }
    for (const auto& [dev, count] : histogram) {
      out += "\"" + r.config.name + "\"," + std::to_string(dev) + "," + std::to_string(count) + "\n";
    }
  }
  return out;
}

}  // namespace ndater
