// SPDX-License-Identifier: Apache-2.0
#include "ndater/model.hpp"

#include <fstream>
#include <sstream>

namespace ndater {

std::size_t argmax_earliest(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

template <typename Real>
std::size_t read_embedding_file(const std::string& path, const Vocabulary& vocab, Tensor<Real>& table) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding file '" + path + "'");
  const std::size_t dim = table.cols();
  std::size_t replaced = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": non-numeric embedding component");
    }
    if (values.size() != dim) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                        " components, found " + std::to_string(values.size()));
    }
    const std::size_t id = vocab.id(token);
    if (id == Vocabulary::kUnk && token != "<unk>") continue;
    for (std::size_t c = 0; c < dim; ++c) table(id, c) = static_cast<Real>(values[c]);
    ++replaced;
  }
  return replaced;
}

template std::size_t read_embedding_file<float>(const std::string&, const Vocabulary&, Tensor<float>&);
template std::size_t read_embedding_file<double>(const std::string&, const Vocabulary&, Tensor<double>&);

template class DatingModel<float>;
template class DatingModel<double>;

}  // namespace ndater
