// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <variant>

#include "cli.hpp"
#include "ndater/annotation_io.hpp"
#include "ndater/gradcheck.hpp"
#include "ndater/metrics.hpp"
#include "ndater/model.hpp"
#include "ndater/synthetic.hpp"

namespace py = pybind11;
using namespace ndater;

namespace {

class Model {
 public:
  explicit Model(const std::string& path) : model_(load(path)) {}

  py::dict predict(const std::string& record) {
    const auto doc = parse_annotation(record);
    const Prediction p = std::visit([&](auto& m) { return m.predict(doc); }, model_);
    py::dict out;
    out["doc_id"] = doc.doc_id;
    out["predicted_year"] = p.predicted_year;
    out["probs"] = p.probs;
    out["gold_year"] = p.gold_year;
    return out;
  }

  std::string config_json() const {
    return std::visit([](const auto& m) { return config_to_json(m.config()); }, model_);
  }

  int precision() const { return std::holds_alternative<DatingModel<float>>(model_) ? 32 : 64; }

 private:
  using Variant = std::variant<DatingModel<float>, DatingModel<double>>;

  static Variant load(const std::string& path) {
    if (peek_checkpoint(path).scalar_bytes == sizeof(float)) return DatingModel<float>::load(path);
    return DatingModel<double>::load(path);
  }

  Variant model_;
};

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["documents"] = r.documents;
  d["accuracy"] = r.accuracy;
  d["mean_abs_deviation_years"] = r.mean_abs_deviation_years;
  d["accuracy_with_time_mention"] = r.accuracy_with_time_mention;
  d["accuracy_without_time_mention"] = r.accuracy_without_time_mention;
  d["documents_with_time_mention"] = r.with_mention;
  d["documents_without_time_mention"] = r.without_mention;
  d["confusion"] = r.confusion;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Document dating with temporal graph convolutions";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);

  m.def(
      "canonicalize", [](const std::string& record) { return serialize_annotation(parse_annotation(record)); },
      py::arg("record"), "Validate one JSON record and return its canonical serialization.");

  m.def(
      "has_year_mention", [](const std::string& record) { return parse_annotation(record).has_year_mention; },
      py::arg("record"));

  m.def(
      "generate_synthetic",
      [](std::size_t n_docs, int start_year, int end_year, std::uint64_t seed, const std::string& difficulty,
         double no_mention_fraction) {
        SyntheticOptions o;
        o.n_docs = n_docs;
        o.start_year = start_year;
        o.end_year = end_year;
        o.seed = seed;
        const auto d = parse_difficulty(difficulty);
        if (!d) throw ConfigError("difficulty must be 'easy' or 'hard'");
        o.difficulty = *d;
        o.no_mention_fraction = no_mention_fraction;
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : generate_synthetic_corpus(o)) out.emplace_back(serialize_annotation(s.doc), s.derivation);
        return out;
      },
      py::arg("n_docs") = 200, py::arg("start_year") = 1995, py::arg("end_year") = 1999, py::arg("seed") = 1,
      py::arg("difficulty") = "easy", py::arg("no_mention_fraction") = 0.15,
      "List of (record, derivation) pairs.");

  m.def(
      "offset_document",
      [](int anchor_year, int offset, const std::string& relation, std::uint64_t seed) {
        const auto rel = parse_temporal_relation(relation);
        if (!rel) throw ConfigError("unknown relation '" + relation + "'");
        return serialize_annotation(offset_document("offset", anchor_year, offset, *rel, seed).doc);
      },
      py::arg("anchor_year"), py::arg("offset"), py::arg("relation"), py::arg("seed") = 1);

  m.def(
      "derive_year",
      [](const std::string& record, int first, int last) -> std::optional<int> {
        return derive_dct_year(parse_annotation(record), {first, last});
      },
      py::arg("record"), py::arg("first"), py::arg("last"));

  m.def(
      "score",
      [](const std::vector<int>& predicted, const std::vector<int>& gold, const std::vector<bool>& mention,
         int start_year, int end_year) {
        if (predicted.size() != gold.size() || gold.size() != mention.size()) {
          throw DimensionError("predicted, gold and mention must have equal length");
        }
        std::vector<ScoredDocument> docs;
        for (std::size_t i = 0; i < gold.size(); ++i) docs.push_back({predicted[i], gold[i], mention[i]});
        return report_dict(score_predictions(docs, start_year, end_year));
      },
      py::arg("predicted"), py::arg("gold"), py::arg("has_year_mention"), py::arg("start_year"), py::arg("end_year"));

  m.def(
      "gradcheck",
      [](std::size_t dims, std::uint64_t seed) {
        py::gil_scoped_release release;
        return run_gradcheck_suite<double>(dims, seed).max_rel_error;
      },
      py::arg("dims") = 4, py::arg("seed") = 7, "Largest relative gradient error over every check.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv = {"ndater"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def("predict", &Model::predict, py::arg("record"))
      .def_property_readonly("config_json", &Model::config_json)
      .def_property_readonly("precision", &Model::precision);
}
