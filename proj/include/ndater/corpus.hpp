// SPDX-License-Identifier: Apache-2.0
//
// A corpus on disk is a directory holding one or more annotation files
// (*.jsonl) and manifest.json:
//
//   {"format": "ndater-corpus", "start_year": int, "end_year": int,
//    "files": [str], "splits": {"train": [id], "dev": [id], "test": [id]},
//    "ratios": [train, dev, test]}
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ndater/annotation_io.hpp"
#include "ndater/document.hpp"

namespace ndater {

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};
};

// Seeded shuffle, then cut by ratio (rounded down for train and dev, the
// remainder to test).
DatasetSplit make_split(const std::vector<std::string>& doc_ids, std::uint64_t seed,
                        std::array<double, 3> ratios = {0.8, 0.1, 0.1});

// Throws ValidationError unless the three lists are disjoint and cover `doc_ids`.
void check_split(const DatasetSplit& split, const std::vector<std::string>& doc_ids);

struct Corpus {
  std::vector<AnnotatedDocument> docs;
  int start_year = 0;
  int end_year = 0;
  DatasetSplit split;
  IngestStats stats;

  std::vector<std::string> ids() const;
  // Documents named by `ids`, in that order.
  std::vector<AnnotatedDocument> select(const std::vector<std::string>& ids) const;
};

Corpus load_corpus(const std::string& dir);
void save_corpus(const std::string& dir, const Corpus& corpus, const std::string& file_name = "docs.jsonl");

}  // namespace ndater
