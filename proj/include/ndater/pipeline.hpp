// SPDX-License-Identifier: Apache-2.0
//
// Training loop, evaluation and the ablation harness.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ndater/adam.hpp"
#include "ndater/corpus.hpp"
#include "ndater/metrics.hpp"
#include "ndater/model.hpp"

namespace ndater {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;  // epochs without dev improvement before stopping
  std::size_t max_tokens = 300;
  AdamConfig adam;
  std::uint64_t seed = 1;
  // Also score the training split after every epoch.
  bool track_train_accuracy = false;
  // Stop as soon as training accuracy reaches this value (implies tracking).
  std::optional<double> stop_at_train_accuracy;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean per-document loss over the epoch
  std::optional<double> dev_accuracy;
  std::optional<double> train_accuracy;
};

// One line-oriented JSON record: {"epoch", "train_loss", "dev_acc"[, "train_acc"]}.
std::string epoch_record_json(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::optional<double> best_dev_accuracy;
  bool early_stopped = false;
};

struct EvalResult {
  EvalReport report;
  std::vector<std::string> doc_ids;
  std::vector<Prediction> predictions;
};

// Years outside the model's range raise ConfigError.
template <typename Real>
std::vector<PreparedDocument> prepare_all(const DatingModel<Real>& model, const std::vector<AnnotatedDocument>& docs,
                                          std::size_t max_tokens) {
  std::vector<PreparedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    auto p = model.prepare(d, max_tokens);
    if (p.gold_year && !p.label) {
      throw ConfigError("document '" + d.doc_id + "' has gold year " + std::to_string(*p.gold_year) +
                        " outside the model's range");
    }
    out.push_back(std::move(p));
  }
  return out;
}

template <typename Real>
EvalResult evaluate_prepared(DatingModel<Real>& model, const std::vector<PreparedDocument>& docs) {
  EvalResult r;
  std::vector<ScoredDocument> scored;
  for (const auto& d : docs) {
    if (!d.gold_year) throw ValidationError("document '" + d.doc_id + "' has no gold_year to evaluate against");
    auto p = model.predict(d);
    scored.push_back({p.predicted_year, *d.gold_year, d.has_year_mention});
    r.doc_ids.push_back(d.doc_id);
    r.predictions.push_back(std::move(p));
  }
  r.report = score_predictions(scored, model.config().start_year, model.config().end_year);
  return r;
}

template <typename Real>
EvalResult evaluate(DatingModel<Real>& model, const std::vector<AnnotatedDocument>& docs, std::size_t max_tokens = 300) {
  return evaluate_prepared(model, prepare_all(model, docs, max_tokens));
}

// Throws ConfigError unless the model covers exactly the corpus year range.
void require_matching_range(const ModelConfig& config, const Corpus& corpus);

namespace detail {

// Batches of similar length: documents sorted by token count (ties broken by a
// shuffle), cut into batches, batch order shuffled.
template <typename Rng>
std::vector<std::vector<std::size_t>> length_batches(const std::vector<PreparedDocument>& docs, std::size_t batch_size,
                                                     Rng& rng) {
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return docs[a].token_ids.size() < docs[b].token_ids.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace detail

// Mini-batch Adam with the gradient averaged over each batch. When a dev set is
// given, the parameters of the best dev epoch are restored at the end.
// `on_epoch` sees every record as soon as it is complete.
template <typename Real>
TrainResult train(DatingModel<Real>& model, const std::vector<AnnotatedDocument>& train_docs,
                  const std::vector<AnnotatedDocument>& dev_docs, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (train_docs.empty()) throw ConfigError("training split is empty");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  const auto train_set = prepare_all(model, train_docs, cfg.max_tokens);
  const auto dev_set = prepare_all(model, dev_docs, cfg.max_tokens);
  for (const auto& d : train_set) {
    if (!d.label) throw ValidationError("training document '" + d.doc_id + "' has no gold_year");
  }

  std::mt19937_64 rng(cfg.seed);
  AdamState<Real> adam{cfg.adam, 0, {}};
  TrainResult result;
  auto best = model.snapshot();
  std::size_t since_best = 0;
  const bool track_train = cfg.track_train_accuracy || cfg.stop_at_train_accuracy.has_value();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& batch : detail::length_batches(train_set, cfg.batch_size, rng)) {
      model.params().zero_grad();
      const Real weight = static_cast<Real>(1.0 / static_cast<double>(batch.size()));
      for (std::size_t i : batch) {
        Tape<Real> tape;
        const auto loss = model.loss(tape, train_set[i], true, rng);
        const double value = static_cast<double>(loss.value()[0]);
        if (!std::isfinite(value)) {
          throw NumericError("non-finite loss on document '" + train_set[i].doc_id + "' in epoch " +
                             std::to_string(epoch));
        }
        loss_sum += value;
        tape.backward(loss, weight);
      }
      adam_step(model.params(), adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!dev_set.empty()) rec.dev_accuracy = evaluate_prepared(model, dev_set).report.accuracy;
    if (track_train) rec.train_accuracy = evaluate_prepared(model, train_set).report.accuracy;
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.dev_accuracy) {
      if (!result.best_dev_accuracy || *rec.dev_accuracy > *result.best_dev_accuracy) {
        result.best_dev_accuracy = rec.dev_accuracy;
        result.best_epoch = epoch;
        best = model.snapshot();
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
    if (cfg.stop_at_train_accuracy && rec.train_accuracy && *rec.train_accuracy >= *cfg.stop_at_train_accuracy) {
      // The caller asked for the fitted parameters, not the best dev ones.
      return result;
    }
  }
  if (result.best_dev_accuracy) model.restore(best);
  return result;
}

struct AblationRow {
  ModelConfig config;
  EvalReport report;
  TrainResult training;
};

// Trains and evaluates every configuration on the corpus split, all with the
// same seed. `progress` is called after each row.
template <typename Real>
std::vector<AblationRow> run_ablation_harness(const Corpus& corpus, const std::vector<ModelConfig>& grid,
                                              const TrainConfig& train_cfg, std::uint64_t seed,
                                              const std::function<void(const AblationRow&)>& progress = {}) {
  const auto train_docs = corpus.select(corpus.split.train);
  const auto dev_docs = corpus.select(corpus.split.dev);
  const auto test_docs = corpus.select(corpus.split.test);
  if (test_docs.empty()) throw ConfigError("ablation needs a non-empty test split");
  const Vocabulary vocab = Vocabulary::build(train_docs);
  std::vector<AblationRow> rows;
  for (const auto& config : grid) {
    require_matching_range(config, corpus);
    DatingModel<Real> model(config, vocab, seed);
    TrainConfig cfg = train_cfg;
    cfg.seed = seed;
    AblationRow row;
    row.config = config;
    row.training = train(model, train_docs, dev_docs, cfg);
    row.report = evaluate(model, test_docs, cfg.max_tokens).report;
    if (progress) progress(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

// {"rows": [{"config": {...}, "report": {...}, "best_epoch": n, "epochs": n}]}
std::string ablation_json(const std::vector<AblationRow>& rows);
std::string ablation_table(const std::vector<AblationRow>& rows);
// config,abs_deviation_years,documents: one line per config and deviation.
std::string deviation_csv(const std::vector<AblationRow>& rows);

}  // namespace ndater
