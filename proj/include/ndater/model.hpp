// SPDX-License-Identifier: Apache-2.0
//
// Document dating network: token embeddings -> Bi-LSTM -> syntactic GCN ->
// (average pool, temporal GCN over events/times/DCT) -> softmax over years.
// Each stage can be switched off through ModelConfig.
#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ndater/autograd.hpp"
#include "ndater/checkpoint.hpp"
#include "ndater/document.hpp"
#include "ndater/layers.hpp"
#include "ndater/model_config.hpp"

namespace ndater {

struct Prediction {
  std::vector<double> probs;  // one entry per year of the configured range
  int predicted_year = 0;
  std::optional<int> gold_year;
};

// Index of the largest probability; ties go to the earliest year.
std::size_t argmax_earliest(const std::vector<double>& probs);

// Everything the network needs from a document, computed once.
struct PreparedDocument {
  std::string doc_id;
  std::vector<std::size_t> token_ids;
  RelationGraph syntactic;
  TemporalGraph temporal;
  std::optional<int> gold_year;
  std::optional<std::size_t> label;
  bool has_year_mention = false;
};

template <typename Real>
class DatingModel {
 public:
  using Rng = std::mt19937_64;

  DatingModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed) : config_(std::move(config)), vocab_(std::move(vocab)) {
    config_.validate();
    Rng rng(seed);
    build(rng);
  }

  DatingModel(const DatingModel&) = delete;
  DatingModel& operator=(const DatingModel&) = delete;
  DatingModel(DatingModel&&) noexcept = default;
  DatingModel& operator=(DatingModel&&) noexcept = default;

  static DatingModel load(const std::string& path) {
    const auto header = peek_checkpoint(path);
    if (header.scalar_bytes != sizeof(Real)) {
      throw CheckpointError("checkpoint '" + path + "' stores " + std::to_string(8 * header.scalar_bytes) +
                            "-bit parameters");
    }
    ModelConfig config;
    Vocabulary vocab;
    parse_model_metadata(header.metadata, config, vocab);
    DatingModel model(config, vocab, 0);
    const auto expected = model.params_.names();
    load_checkpoint(path, model.params_);
    if (model.params_.names() != expected) throw CheckpointError("checkpoint '" + path + "' has unexpected parameters");
    return model;
  }

  void save(const std::string& path) const {
    save_checkpoint(path, params_, model_metadata(config_, vocab_, sizeof(Real)));
  }

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  ParameterStore<Real>& params() { return params_; }
  const ParameterStore<Real>& params() const { return params_; }

  std::map<std::string, Tensor<Real>> snapshot() const {
    std::map<std::string, Tensor<Real>> out;
    for (const auto& [name, p] : params_) out.emplace(name, p.value);
    return out;
  }

  void restore(const std::map<std::string, Tensor<Real>>& values) {
    for (auto& [name, p] : params_) p.value = values.at(name);
  }

  // Overwrites embedding rows of known tokens from a GloVe-style text file
  // (token followed by `embedding` floats per line). Returns rows replaced.
  std::size_t load_embeddings(const std::string& path);

  PreparedDocument prepare(const AnnotatedDocument& doc, std::size_t max_tokens = 300) const {
    const AnnotatedDocument d = truncate(doc, max_tokens);
    PreparedDocument p;
    p.doc_id = d.doc_id;
    p.token_ids = vocab_.encode(d.tokens);
    p.syntactic = collapse_syntactic_labels(expand_edges(dependency_graph(d)));
    p.temporal = build_temporal_graph(d);
    p.gold_year = d.gold_year;
    if (d.gold_year) p.label = config_.label_of(*d.gold_year);
    p.has_year_mention = d.has_year_mention;
    return p;
  }

  // 1 x C unnormalized scores.
  Var<Real> logits(Tape<Real>& tape, const PreparedDocument& doc, bool training, Rng& rng) {
    const std::size_t n = doc.token_ids.size();
    Var<Real> h = gather_rows(tape.param(*embedding_), doc.token_ids);
    if (config_.use_bilstm) h = bilstm_forward(h, bilstm_, config_.keep_prob, training, rng);
    if (config_.use_sgcn) h = gcn_forward(h, doc.syntactic, sgcn_);
    const Var<Real> pooled = average_pool(h);

    Var<Real> features = pooled;
    if (config_.tgcn_layers > 0) {
      std::vector<std::vector<std::size_t>> groups = doc.temporal.node_tokens;
      // The DCT starts from the pooled document vector.
      auto& dct_rows = groups[doc.temporal.dct];
      dct_rows.resize(n);
      std::iota(dct_rows.begin(), dct_rows.end(), std::size_t{0});
      const Var<Real> nodes = group_mean_rows(h, std::move(groups));
      const Var<Real> temporal = gcn_stack(nodes, doc.temporal.relations, tgcn_);
      features = concat_cols<Real>({row(temporal, doc.temporal.dct), pooled});
    }
    features = dropout(features, config_.keep_prob, training, rng);
    return add_bias(matmul(features, tape.param(*classifier_w_)), tape.param(*classifier_b_));
  }

  Var<Real> loss(Tape<Real>& tape, const PreparedDocument& doc, bool training, Rng& rng) {
    if (!doc.label) throw IndexError("document '" + doc.doc_id + "' has no gold year inside the model's range");
    return softmax_cross_entropy(logits(tape, doc, training, rng), *doc.label);
  }

  Prediction predict(const PreparedDocument& doc) {
    Tape<Real> tape;
    Rng unused(0);
    const Var<Real> out = logits(tape, doc, false, unused);
    const auto probs = softmax<Real>(out.value().values());
    Prediction p;
    p.probs.assign(probs.begin(), probs.end());
    p.predicted_year = config_.year_of(argmax_earliest(p.probs));
    p.gold_year = doc.gold_year;
    return p;
  }

  Prediction predict(const AnnotatedDocument& doc) { return predict(prepare(doc)); }

  std::size_t classifier_input_dim() const {
    return token_dim() + (config_.tgcn_layers > 0 ? config_.dims.temporal : 0);
  }

 private:
  std::size_t token_dim() const {
    if (config_.use_sgcn) return config_.dims.syntactic;
    if (config_.use_bilstm) return 2 * config_.dims.lstm_hidden;
    return config_.dims.embedding;
  }

  void build(Rng& rng) {
    const auto& dims = config_.dims;
    embedding_ = &params_.add("embedding", uniform_tensor<Real>({vocab_.size(), dims.embedding}, 0.1, rng));
    std::size_t width = dims.embedding;
    if (config_.use_bilstm) {
      bilstm_ = make_bilstm(params_, "bilstm", width, dims.lstm_hidden, rng);
      width = bilstm_.output_dim();
    }
    if (config_.use_sgcn) {
      sgcn_ = make_gcn_layer(params_, "sgcn.0", syntactic_relation_names(), width, dims.syntactic, config_.gating, rng);
      width = dims.syntactic;
    }
    for (int k = 0; k < config_.tgcn_layers; ++k) {
      const std::size_t in = k == 0 ? width : dims.temporal;
      tgcn_.push_back(make_gcn_layer(params_, "tgcn." + std::to_string(k), temporal_relation_names(), in,
                                     dims.temporal, config_.gating, rng));
    }
    const std::size_t in = classifier_input_dim();
    const std::size_t classes = config_.num_classes();
    classifier_w_ = &params_.add("classifier.W", config_.zero_init_classifier ? Tensor<Real>::matrix(in, classes)
                                                                             : xavier_uniform<Real>(in, classes, rng));
    classifier_b_ = &params_.add("classifier.b", Tensor<Real>::matrix(1, classes));
  }

  ModelConfig config_;
  Vocabulary vocab_;
  ParameterStore<Real> params_;
  Parameter<Real>* embedding_ = nullptr;
  BiLstmParams<Real> bilstm_;
  GcnLayerParams<Real> sgcn_;
  std::vector<GcnLayerParams<Real>> tgcn_;
  Parameter<Real>* classifier_w_ = nullptr;
  Parameter<Real>* classifier_b_ = nullptr;
};

// Reads a GloVe-style embedding file into rows of `table` for tokens present
// in `vocab`.
template <typename Real>
std::size_t read_embedding_file(const std::string& path, const Vocabulary& vocab, Tensor<Real>& table);

template <typename Real>
std::size_t DatingModel<Real>::load_embeddings(const std::string& path) {
  return read_embedding_file(path, vocab_, embedding_->value);
}

extern template class DatingModel<float>;
extern template class DatingModel<double>;

}  // namespace ndater
