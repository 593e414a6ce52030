// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ndater/document.hpp"

namespace ndater {

struct ModelDims {
  std::size_t embedding = 300;
  std::size_t lstm_hidden = 128;  // per direction; the Bi-LSTM emits 2x this
  std::size_t syntactic = 128;
  std::size_t temporal = 128;

  bool operator==(const ModelDims&) const = default;
};

struct ModelConfig {
  std::string name = "bilstm+sgcn+tgcn";
  bool use_bilstm = true;
  bool use_sgcn = true;
  int tgcn_layers = 1;  // 0 disables the temporal GCN
  bool gating = true;
  ModelDims dims;
  double keep_prob = 0.8;
  int start_year = 1995;
  int end_year = 2010;
  bool zero_init_classifier = true;

  std::size_t num_classes() const { return static_cast<std::size_t>(end_year - start_year + 1); }
  std::optional<std::size_t> label_of(int year) const {
    if (year < start_year || year > end_year) return std::nullopt;
    return static_cast<std::size_t>(year - start_year);
  }
  int year_of(std::size_t label) const { return start_year + static_cast<int>(label); }

  // Throws ConfigError on an illegal combination.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// The ten implemented ablation rows, in table order: T-GCN; S-GCN + T-GCN for
// K = 1..3; Bi-LSTM; Bi-LSTM + T-GCN; Bi-LSTM + S-GCN + T-GCN without gates;
// Bi-LSTM + S-GCN + T-GCN for K = 1..3. Dimensions, year range and dropout
// come from the template.
std::vector<ModelConfig> ablation_grid(const ModelConfig& base);

std::string config_to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const std::string& text);

// Token vocabulary. Id 0 is padding, id 1 the unknown-word vector.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  static Vocabulary build(const std::vector<AnnotatedDocument>& docs);

  std::size_t id(const std::string& token) const;
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Checkpoint metadata: model config, vocabulary and scalar width as JSON.
std::string model_metadata(const ModelConfig& config, const Vocabulary& vocab, std::size_t scalar_bytes);
void parse_model_metadata(const std::string& json, ModelConfig& config, Vocabulary& vocab);

}  // namespace ndater
