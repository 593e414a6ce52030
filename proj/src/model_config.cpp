// SPDX-License-Identifier: Apache-2.0
#include "ndater/model_config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "ndater/errors.hpp"

namespace ndater {

using nlohmann::json;
using nlohmann::ordered_json;

void ModelConfig::validate() const {
  if (!use_bilstm && !use_sgcn && tgcn_layers <= 0) {
    throw ConfigError("config '" + name + "': enable at least one of bilstm, sgcn, tgcn");
  }
  if (tgcn_layers < 0) throw ConfigError("config '" + name + "': tgcn_layers must be >= 0");
  if (end_year - start_year + 1 < 2) {
    throw ConfigError("config '" + name + "': year range [" + std::to_string(start_year) + ", " +
                      std::to_string(end_year) + "] must contain at least two years");
  }
  if (!(keep_prob > 0.0) || keep_prob > 1.0) throw ConfigError("config '" + name + "': keep_prob must lie in (0, 1]");
  if (dims.embedding == 0 || dims.lstm_hidden == 0 || dims.syntactic == 0 || dims.temporal == 0) {
    throw ConfigError("config '" + name + "': dimensions must be positive");
  }
}

std::vector<ModelConfig> ablation_grid(const ModelConfig& base) {
  auto make = [&](std::string name, bool bilstm, bool sgcn, int k, bool gate) {
    ModelConfig c = base;
    c.name = std::move(name);
    c.use_bilstm = bilstm;
    c.use_sgcn = sgcn;
    c.tgcn_layers = k;
    c.gating = gate;
    return c;
  };
  return {
      make("T-GCN", false, false, 1, true),
      make("S-GCN + T-GCN (K=1)", false, true, 1, true),
      make("S-GCN + T-GCN (K=2)", false, true, 2, true),
      make("S-GCN + T-GCN (K=3)", false, true, 3, true),
      make("Bi-LSTM", true, false, 0, true),
      make("Bi-LSTM + T-GCN", true, false, 1, true),
      make("Bi-LSTM + S-GCN + T-GCN (no gate)", true, true, 1, false),
      make("Bi-LSTM + S-GCN + T-GCN (K=1)", true, true, 1, true),
      make("Bi-LSTM + S-GCN + T-GCN (K=2)", true, true, 2, true),
      make("Bi-LSTM + S-GCN + T-GCN (K=3)", true, true, 3, true),
  };
}

namespace {

ordered_json to_json(const ModelConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["use_bilstm"] = c.use_bilstm;
  j["use_sgcn"] = c.use_sgcn;
  j["tgcn_layers"] = c.tgcn_layers;
  j["gating"] = c.gating;
  j["dims"] = {{"embedding", c.dims.embedding},
               {"lstm_hidden", c.dims.lstm_hidden},
               {"syntactic", c.dims.syntactic},
               {"temporal", c.dims.temporal}};
  j["keep_prob"] = c.keep_prob;
  j["start_year"] = c.start_year;
  j["end_year"] = c.end_year;
  j["zero_init_classifier"] = c.zero_init_classifier;
  return j;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config field '" + where + key + "'");
  }
}

ModelConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  reject_unknown(j,
                 {"name", "use_bilstm", "use_sgcn", "tgcn_layers", "gating", "dims", "keep_prob", "start_year",
                  "end_year", "zero_init_classifier"},
                 "");
  ModelConfig c;
  read(j, "name", c.name);
  read(j, "use_bilstm", c.use_bilstm);
  read(j, "use_sgcn", c.use_sgcn);
  read(j, "tgcn_layers", c.tgcn_layers);
  read(j, "gating", c.gating);
  if (auto it = j.find("dims"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("config field 'dims' must be an object");
    reject_unknown(*it, {"embedding", "lstm_hidden", "syntactic", "temporal"}, "dims.");
    read(*it, "embedding", c.dims.embedding);
    read(*it, "lstm_hidden", c.dims.lstm_hidden);
    read(*it, "syntactic", c.dims.syntactic);
    read(*it, "temporal", c.dims.temporal);
  }
  read(j, "keep_prob", c.keep_prob);
  read(j, "start_year", c.start_year);
  read(j, "end_year", c.end_year);
  read(j, "zero_init_classifier", c.zero_init_classifier);
  c.validate();
  return c;
}

}  // namespace

std::string config_to_json(const ModelConfig& config) { return to_json(config).dump(2); }

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    tokens.insert(tokens.begin(), {"<pad>", "<unk>"});
  }
  tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) throw ConfigError("duplicate vocabulary entry '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::build(const std::vector<AnnotatedDocument>& docs) {
  std::set<std::string> seen;
  for (const auto& d : docs) seen.insert(d.tokens.begin(), d.tokens.end());
  seen.erase("<pad>");
  seen.erase("<unk>");
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::string model_metadata(const ModelConfig& config, const Vocabulary& vocab, std::size_t scalar_bytes) {
  ordered_json j;
  j["format"] = "ndater-model";
  j["precision"] = 8 * scalar_bytes;
  j["config"] = to_json(config);
  j["vocabulary"] = vocab.tokens();
  return j.dump();
}

void parse_model_metadata(const std::string& text, ModelConfig& config, Vocabulary& vocab) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "ndater-model") throw ConfigError("checkpoint metadata has an unexpected format tag");
  config = from_json(j.at("config"));
  vocab = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
}

}  // namespace ndater
