// SPDX-License-Identifier: Apache-2.0
#include "ndater/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace ndater {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

DatasetSplit make_split(const std::vector<std::string>& doc_ids, std::uint64_t seed, std::array<double, 3> ratios) {
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
  }
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (!(total > 0.0)) throw ConfigError("split ratios must not all be zero");
  std::vector<std::string> ids = doc_ids;
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = ids.size();
  const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * ratios[0] / total);
  const auto n_dev = std::min(n - n_train, static_cast<std::size_t>(static_cast<double>(n) * ratios[1] / total));
  DatasetSplit split;
  split.ratios = ratios;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.dev.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                   ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), ids.end());
  return split;
}

void check_split(const DatasetSplit& split, const std::vector<std::string>& doc_ids) {
  std::set<std::string> seen;
  for (const auto* part : {&split.train, &split.dev, &split.test}) {
    for (const auto& id : *part) {
      if (!seen.insert(id).second) throw ValidationError("split lists document '" + id + "' more than once");
    }
  }
  const std::set<std::string> all(doc_ids.begin(), doc_ids.end());
  if (seen != all) throw ValidationError("split does not cover exactly the corpus documents");
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.doc_id);
  return out;
}

std::vector<AnnotatedDocument> Corpus::select(const std::vector<std::string>& wanted) const {
  std::unordered_map<std::string, const AnnotatedDocument*> by_id;
  for (const auto& d : docs) by_id.emplace(d.doc_id, &d);
  std::vector<AnnotatedDocument> out;
  out.reserve(wanted.size());
  for (const auto& id : wanted) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("unknown document id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

Corpus load_corpus(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open corpus manifest '" + manifest_path.string() + "'");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("manifest.json: " + std::string(e.what()));
  }
  Corpus c;
  try {
    c.start_year = m.at("start_year").get<int>();
    c.end_year = m.at("end_year").get<int>();
    for (const auto& f : m.at("files")) {
      auto docs = read_annotation_file((fs::path(dir) / f.get<std::string>()).string(), &c.stats);
      std::move(docs.begin(), docs.end(), std::back_inserter(c.docs));
    }
    const auto& s = m.at("splits");
    c.split.train = s.at("train").get<std::vector<std::string>>();
    c.split.dev = s.at("dev").get<std::vector<std::string>>();
    c.split.test = s.at("test").get<std::vector<std::string>>();
    if (auto it = m.find("ratios"); it != m.end()) c.split.ratios = it->get<std::array<double, 3>>();
  } catch (const json::exception& e) {
    throw ValidationError("manifest.json: " + std::string(e.what()));
  }
  check_split(c.split, c.ids());
  return c;
}

void save_corpus(const std::string& dir, const Corpus& corpus, const std::string& file_name) {
  fs::create_directories(dir);
  write_annotation_file((fs::path(dir) / file_name).string(), corpus.docs);
  ordered_json m;
  m["format"] = "ndater-corpus";
  m["start_year"] = corpus.start_year;
  m["end_year"] = corpus.end_year;
  m["files"] = {file_name};
  m["splits"] = {{"train", corpus.split.train}, {"dev", corpus.split.dev}, {"test", corpus.split.test}};
  m["ratios"] = corpus.split.ratios;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  out << m.dump(2) << '\n';
  if (!out) throw ValidationError("cannot write manifest in '" + dir + "'");
}

}  // namespace ndater
