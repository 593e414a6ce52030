// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ndater/checkpoint.hpp"
#include "ndater/corpus.hpp"
#include "ndater/gradcheck.hpp"
#include "ndater/pipeline.hpp"
#include "ndater/synthetic.hpp"

namespace ndater::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kGradcheckThreshold = 1e-4;

struct Options {
  std::string config_path;
  std::string corpus;
  std::string out;
  std::string checkpoint;
  std::string input;
  std::string split = "test";
  std::string difficulty = "easy";
  std::string embeddings;
  std::string components;
  std::uint64_t seed = 1;
  int k_layers = 1;
  bool no_gate = false;
  int precision = 32;
  std::size_t n_docs = 1000;
  std::size_t dims = 8;
  int start_year = 1995;
  int end_year = 1999;
  double no_mention_fraction = 0.15;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::size_t patience = 5;
  std::size_t max_tokens = 300;
  double lr = 0.001;
  bool table = false;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

// {"model": {...ModelConfig...}, "train": {"batch_size", "max_epochs",
// "patience", "max_tokens", "lr"}}
RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      rc.model = config_from_json(value.dump());
    } else if (key == "train") {
      for (const auto& [k, v] : value.items()) {
        try {
          if (k == "batch_size") rc.train.batch_size = v.get<std::size_t>();
          else if (k == "max_epochs") rc.train.max_epochs = v.get<std::size_t>();
          else if (k == "patience") rc.train.patience = v.get<std::size_t>();
          else if (k == "max_tokens") rc.train.max_tokens = v.get<std::size_t>();
          else if (k == "lr") rc.train.adam.lr = v.get<double>();
          else throw ConfigError(path + ": unknown train key '" + k + "'");
        } catch (const json::exception& e) {
          throw ConfigError(path + ": train." + k + ": " + e.what());
        }
      }
    } else {
      throw ConfigError(path + ": unknown key '" + key + "'");
    }
  }
  return rc;
}

// Flags given on the command line win over the config file.
RunConfig resolve_config(const Options& o, const CLI::App& sub) {
  RunConfig rc = load_run_config(o.config_path);
  auto given = [&](const char* flag) { return sub.count(flag) > 0; };
  if (given("--k-layers")) rc.model.tgcn_layers = o.k_layers;
  if (given("--no-gate")) rc.model.gating = false;
  if (given("--components")) {
    rc.model.use_bilstm = rc.model.use_sgcn = false;
    bool tgcn = false;
    std::stringstream ss(o.components);
    for (std::string part; std::getline(ss, part, ',');) {
      if (part == "bilstm") rc.model.use_bilstm = true;
      if (part == "sgcn") rc.model.use_sgcn = true;
      if (part == "tgcn") tgcn = true;
    }
    if (!tgcn) rc.model.tgcn_layers = 0;
    else if (rc.model.tgcn_layers == 0) rc.model.tgcn_layers = given("--k-layers") ? o.k_layers : 1;
  }
  if (given("--epochs")) rc.train.max_epochs = o.epochs;
  if (given("--batch-size")) rc.train.batch_size = o.batch_size;
  if (given("--patience")) rc.train.patience = o.patience;
  if (given("--max-tokens")) rc.train.max_tokens = o.max_tokens;
  if (given("--lr")) rc.train.adam.lr = o.lr;
  rc.train.seed = o.seed;
  return rc;
}

std::string describe_components(const ModelConfig& c) {
  std::string name;
  auto add = [&](const std::string& part) { name += (name.empty() ? "" : "+") + part; };
  if (c.use_bilstm) add("bilstm");
  if (c.use_sgcn) add("sgcn");
  if (c.tgcn_layers > 0) add("tgcn" + std::to_string(c.tgcn_layers));
  if (!c.gating) add("nogate");
  return name.empty() ? "embeddings" : name;
}

std::vector<AnnotatedDocument> split_docs(const Corpus& corpus, const std::string& split) {
  if (split == "train") return corpus.select(corpus.split.train);
  if (split == "dev") return corpus.select(corpus.split.dev);
  if (split == "test") return corpus.select(corpus.split.test);
  return corpus.docs;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
  if (!f) throw ValidationError("cannot write '" + path.string() + "'");
}

// --- commands --------------------------------------------------------------

int cmd_validate(const Options& o, std::ostream& out) {
  IngestStats stats;
  std::size_t n = 0;
  if (fs::is_directory(o.input)) {
    const Corpus c = load_corpus(o.input);
    stats = c.stats;
    n = c.docs.size();
  } else {
    n = read_annotation_file(o.input, &stats).size();
  }
  ordered_json j;
  j["valid"] = true;
  j["documents"] = n;
  j["dropped_relations"] = stats.dropped_relations;
  out << j.dump() << '\n';
  return kOk;
}

int cmd_gen_synth(const Options& o, std::ostream& out) {
  SyntheticOptions so;
  so.n_docs = o.n_docs;
  so.start_year = o.start_year;
  so.end_year = o.end_year;
  so.seed = o.seed;
  so.difficulty = *parse_difficulty(o.difficulty);
  so.no_mention_fraction = o.no_mention_fraction;
  const auto generated = generate_synthetic_corpus(so);

  Corpus corpus;
  corpus.start_year = o.start_year;
  corpus.end_year = o.end_year;
  std::string derivations;
  const YearWindow window{o.start_year - so.max_offset, o.end_year + so.max_offset};
  for (const auto& g : generated) {
    const auto derived = derive_dct_year(g.doc, window);
    if (!derived || derived != g.doc.gold_year) {
      throw ValidationError("document '" + g.doc.doc_id + "': rule interpreter disagrees with gold year");
    }
    ordered_json d;
    d["doc_id"] = g.doc.doc_id;
    d["derivation"] = g.derivation;
    derivations += d.dump() + "\n";
    corpus.docs.push_back(g.doc);
  }
  corpus.split = make_split(corpus.ids(), o.seed);
  save_corpus(o.out, corpus);
  write_text(fs::path(o.out) / "derivations.jsonl", derivations);

  ordered_json j;
  j["out"] = o.out;
  j["documents"] = corpus.docs.size();
  j["difficulty"] = o.difficulty;
  j["start_year"] = o.start_year;
  j["end_year"] = o.end_year;
  j["train"] = corpus.split.train.size();
  j["dev"] = corpus.split.dev.size();
  j["test"] = corpus.split.test.size();
  out << j.dump() << '\n';
  return kOk;
}

template <typename Real>
int train_with(const Options& o, RunConfig rc, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(o.corpus);
  rc.model.start_year = corpus.start_year;
  rc.model.end_year = corpus.end_year;
  if (rc.model.name == ModelConfig{}.name) rc.model.name = describe_components(rc.model);
  const auto train_docs = corpus.select(corpus.split.train);
  const auto dev_docs = corpus.select(corpus.split.dev);
  DatingModel<Real> model(rc.model, Vocabulary::build(train_docs), o.seed);
  if (!o.embeddings.empty()) {
    const auto rows = model.load_embeddings(o.embeddings);
    err << "loaded " << rows << " embedding rows from " << o.embeddings << '\n';
  }

  fs::create_directories(o.out);
  std::ofstream log(fs::path(o.out) / "train_log.jsonl", std::ios::trunc);
  const auto result = train(model, train_docs, dev_docs, rc.train, [&](const EpochRecord& r) {
    const auto line = epoch_record_json(r);
    out << line << '\n' << std::flush;
    log << line << '\n';
  });
  const auto checkpoint = (fs::path(o.out) / "model.ckpt").string();
  model.save(checkpoint);

  ordered_json summary;
  summary["checkpoint"] = checkpoint;
  summary["config"] = ordered_json::parse(config_to_json(rc.model));
  summary["epochs"] = result.epochs.size();
  summary["best_epoch"] = result.best_epoch;
  summary["early_stopped"] = result.early_stopped;
  if (result.best_dev_accuracy) summary["best_dev_acc"] = *result.best_dev_accuracy;
  out << summary.dump() << '\n';
  return kOk;
}

template <typename Real>
int eval_with(const Options& o, std::ostream& out) {
  auto model = DatingModel<Real>::load(o.checkpoint);
  const Corpus corpus = load_corpus(o.corpus);
  require_matching_range(model.config(), corpus);
  const auto docs = split_docs(corpus, o.split);
  const auto result = evaluate(model, docs);
  if (o.table) {
    out << report_table({model.config().name}, {result.report});
  } else {
    out << report_to_json(result.report) << '\n';
  }
  return kOk;
}

template <typename Real>
int predict_with(const Options& o, std::ostream& out) {
  auto model = DatingModel<Real>::load(o.checkpoint);
  for (const auto& doc : read_annotation_file(o.input)) {
    const auto p = model.predict(doc);
    std::vector<std::size_t> order(p.probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.probs[a] > p.probs[b]; });
    ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["predicted_year"] = p.predicted_year;
    j["top3"] = ordered_json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(3, order.size()); ++i) {
      j["top3"].push_back({{"year", model.config().year_of(order[i])}, {"prob", p.probs[order[i]]}});
    }
    if (doc.gold_year) j["gold_year"] = *doc.gold_year;
    out << j.dump() << '\n';
  }
  return kOk;
}

template <typename Real>
int ablate_with(const Options& o, const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(o.corpus);
  ModelConfig base = rc.model;
  base.start_year = corpus.start_year;
  base.end_year = corpus.end_year;
  const auto rows = run_ablation_harness<Real>(corpus, ablation_grid(base), rc.train, o.seed, [&](const AblationRow& r) {
    err << r.config.name << ": accuracy " << r.report.accuracy << '\n';
  });
  const auto json_text = ablation_json(rows);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "ablation.json", json_text + "\n");
    write_text(fs::path(o.out) / "ablation.txt", ablation_table(rows));
    write_text(fs::path(o.out) / "deviation.csv", deviation_csv(rows));
  }
  if (o.table) {
    out << ablation_table(rows);
  } else {
    out << json_text << '\n';
  }
  return kOk;
}

template <typename Real>
int gradcheck_with(const Options& o, std::ostream& out) {
  const auto report = run_gradcheck_suite<Real>(o.dims, o.seed);
  ordered_json j;
  j["precision"] = 8 * sizeof(Real);
  j["dims"] = o.dims;
  j["checks"] = ordered_json::array();
  for (const auto& e : report.entries) {
    j["checks"].push_back(
        {{"name", e.name}, {"scalars", e.scalars}, {"max_rel_error", e.max_rel_error}, {"worst", e.worst_parameter}});
  }
  j["max_rel_error"] = report.max_rel_error;
  j["threshold"] = kGradcheckThreshold;
  const bool passed = report.max_rel_error < kGradcheckThreshold;
  j["passed"] = passed;
  out << j.dump() << '\n';
  return passed ? kOk : kNumericError;
}

int checkpoint_precision(const std::string& path) {
  return static_cast<int>(8 * peek_checkpoint(path).scalar_bytes);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Document dating with syntactic and temporal graph convolutions", "ndater"};
  app.require_subcommand(1);
  Options o;

  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON file with \"model\" and \"train\" sections")
        ->check(CLI::ExistingFile);
    sub->add_option("--k-layers", o.k_layers, "Temporal GCN layers (0 disables)")->check(CLI::Range(0, 16));
    sub->add_flag("--no-gate", o.no_gate, "Disable edge gating");
    sub->add_option("--components", o.components, "Comma list of bilstm,sgcn,tgcn")
        ->check([](const std::string& v) -> std::string {
          std::stringstream ss(v);
          for (std::string part; std::getline(ss, part, ',');) {
            if (part != "bilstm" && part != "sgcn" && part != "tgcn") return "unknown component '" + part + "'";
          }
          return {};
        });
    sub->add_option("--precision", o.precision, "Scalar width in bits")->check(CLI::IsMember({32, 64}));
    sub->add_option("--epochs", o.epochs, "Maximum training epochs")->check(CLI::PositiveNumber);
    sub->add_option("--batch-size", o.batch_size, "Documents per batch")->check(CLI::PositiveNumber);
    sub->add_option("--patience", o.patience, "Epochs without dev improvement before stopping")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-tokens", o.max_tokens, "Truncation length")->check(CLI::PositiveNumber);
    sub->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", o.seed, "Random seed");
  };

  auto* validate = app.add_subcommand("validate", "Schema-check an annotation file or corpus directory");
  validate->add_option("path", o.input, "Annotation file or corpus directory")->required()->check(CLI::ExistingPath);

  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic corpus");
  gen->add_option("--out", o.out, "Output corpus directory")->required();
  gen->add_option("--n-docs", o.n_docs, "Number of documents")->check(CLI::PositiveNumber);
  gen->add_option("--start-year", o.start_year, "First year");
  gen->add_option("--end-year", o.end_year, "Last year");
  gen->add_option("--difficulty", o.difficulty, "easy or hard")->check(CLI::IsMember({"easy", "hard"}));
  gen->add_option("--no-mention-fraction", o.no_mention_fraction, "Share of two-digit-year documents")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", o.seed, "Random seed");

  auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus");
  train_cmd->add_option("--corpus", o.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", o.out, "Output directory for model.ckpt and train_log.jsonl")->required();
  train_cmd->add_option("--embeddings", o.embeddings, "GloVe-format text file")->check(CLI::ExistingFile);
  add_model_flags(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus split");
  eval_cmd->add_option("--corpus", o.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", o.split, "train, dev, test or all")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  eval_cmd->add_flag("--table", o.table, "Fixed-width table instead of JSON");

  auto* predict_cmd = app.add_subcommand("predict", "Predict the year of each document in an annotation file");
  predict_cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("input", o.input, "Annotation file")->required()->check(CLI::ExistingFile);

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate every ablation configuration");
  ablate->add_option("--corpus", o.corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  ablate->add_option("--out", o.out, "Directory for ablation.json, ablation.txt and deviation.csv");
  ablate->add_flag("--table", o.table, "Fixed-width table instead of JSON on stdout");
  add_model_flags(ablate);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every layer and the full model");
  grad->add_option("--dims", o.dims, "Layer width")->check(CLI::Range(2, 64));
  grad->add_option("--precision", o.precision, "Scalar width in bits")->check(CLI::IsMember({32, 64}));
  grad->add_option("--seed", o.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*validate) return cmd_validate(o, out);
    if (*gen) return cmd_gen_synth(o, out);
    if (*train_cmd) {
      const auto rc = resolve_config(o, *train_cmd);
      return o.precision == 64 ? train_with<double>(o, rc, out, err) : train_with<float>(o, rc, out, err);
    }
    if (*eval_cmd) {
      return checkpoint_precision(o.checkpoint) == 64 ? eval_with<double>(o, out) : eval_with<float>(o, out);
    }
    if (*predict_cmd) {
      return checkpoint_precision(o.checkpoint) == 64 ? predict_with<double>(o, out) : predict_with<float>(o, out);
    }
    if (*ablate) {
      const auto rc = resolve_config(o, *ablate);
      return o.precision == 64 ? ablate_with<double>(o, rc, out, err) : ablate_with<float>(o, rc, out, err);
    }
    if (*grad) {
      if (!grad->count("--precision")) o.precision = 64;
      return o.precision == 64 ? gradcheck_with<double>(o, out) : gradcheck_with<float>(o, out);
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace ndater::cli
