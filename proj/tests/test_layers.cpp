// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <numeric>
#include <random>

#include "ndater/layers.hpp"
#include "oracles.hpp"

using namespace ndater;

namespace {

struct Layer {
  ParameterStore<double> store;
  GcnLayerParams<double> params;
};

Layer random_layer(const std::vector<std::string>& relations, std::size_t in, std::size_t out, bool gated,
                   std::mt19937_64& rng) {
  Layer l;
  l.params = make_gcn_layer(l.store, "g", relations, in, out, gated, rng);
  // Nonzero biases so the per-edge bias term is visible.
  for (auto& [_, p] : l.store) {
    if (p.value.rows() == 1) p.value = uniform_tensor<double>(p.value.shape(), 0.5, rng);
  }
  return l;
}

RelationGraph random_temporal(std::size_t n, std::mt19937_64& rng) {
  return to_relation_graph(expand_edges(oracle::random_graph(n, rng() % (2 * n + 1), oracle::temporal_labels(), rng)),
                           temporal_relation_names());
}

double max_abs_diff(const Tensor<double>& a, const oracle::Matrix& b) {
  double m = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a(r, c) - b[r][c]));
  return m;
}

}  // namespace

TEST_CASE("gcn_forward matches the dense oracle on random graphs") {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const std::size_t d_in = 1 + rng() % 6, d_out = 1 + rng() % 6;
    const bool gated = trial % 2 == 0;
    const auto graph = random_temporal(n, rng);
    auto layer = random_layer(temporal_relation_names(), d_in, d_out, gated, rng);
    const auto h = uniform_tensor<double>({n, d_in}, 1.0, rng);

    Tape<double> tape;
    const auto out = gcn_forward(tape.constant(h), graph, layer.params);
    const auto expected = oracle::dense_gcn(oracle::to_matrix(h), oracle::adjacency_of(graph),
                                            oracle::dense_relations(graph, layer.params), gated);
    worst = std::max(worst, max_abs_diff(out.value(), expected));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("a forced-open gate reproduces the ungated layer bit for bit") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    const auto graph = random_temporal(n, rng);
    auto gated = random_layer(temporal_relation_names(), 4, 3, true, rng);
    // Same W and b without gate parameters.
    GcnLayerParams<double> plain = gated.params;
    plain.gated = false;
    const auto h = uniform_tensor<double>({n, 4}, 1.0, rng);
    Tape<double> tape;
    const auto a = gcn_forward(tape.constant(h), graph, gated.params, GateMode::ForceOpen);
    const auto b = gcn_forward(tape.constant(h), graph, plain);
    REQUIRE(a.value().shape() == b.value().shape());
    CHECK(std::memcmp(a.value().data(), b.value().data(), a.value().size() * sizeof(double)) == 0);
  }
}

TEST_CASE("learned gates lie strictly inside (0, 1)") {
  std::mt19937_64 rng(6);
  const auto graph = random_temporal(8, rng);
  auto layer = random_layer(temporal_relation_names(), 5, 5, true, rng);
  // Beyond |z| ~ 37 a double sigmoid rounds to exactly 1.
  const auto h = uniform_tensor<double>({8, 5}, 3.0, rng);
  for (double g : gcn_edge_gates(h, graph, layer.params)) {
    CHECK(g > 0.0);
    CHECK(g < 1.0);
  }
  auto plain = random_layer(temporal_relation_names(), 5, 5, false, rng);
  CHECK_THROWS_AS(gcn_edge_gates(h, graph, plain.params), ConfigError);
}

TEST_CASE("gcn output is equivariant under node permutation") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    const auto raw = oracle::random_graph(n, rng() % 12, oracle::temporal_labels(), rng);
    auto layer = random_layer(temporal_relation_names(), 3, 4, true, rng);
    const auto h = uniform_tensor<double>({n, 3}, 1.0, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor<double> hp({n, 3});
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < 3; ++c) hp(perm[v], c) = h(v, c);

    Tape<double> tape;
    const auto names = temporal_relation_names();
    const auto out = gcn_forward(tape.constant(h), to_relation_graph(expand_edges(raw), names), layer.params);
    const auto out_p =
        gcn_forward(tape.constant(hp), to_relation_graph(expand_edges(permute_nodes(raw, perm)), names), layer.params);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < 4; ++c) CHECK(out_p.value()(perm[v], c) == doctest::Approx(out.value()(v, c)));
  }
}

TEST_CASE("each incoming edge adds its own bias, without degree normalization") {
  // Node 1 receives from 0 and from itself; with zero input the output is the
  // sum of the two biases.
  std::mt19937_64 rng(1);
  LabeledGraph g;
  g.node_count = 2;
  g.edges = {{0, 1, "AFTER", EdgeDirection::Forward}};
  const auto graph = to_relation_graph(expand_edges(g), temporal_relation_names());
  auto layer = random_layer(temporal_relation_names(), 2, 2, false, rng);
  const auto* after = layer.params.find("AFTER");
  const auto* loop = layer.params.find("⊤");
  after->bias->value = Tensor<double>::row_vector({1.0, 2.0});
  loop->bias->value = Tensor<double>::row_vector({0.5, 0.25});
  Tape<double> tape;
  const auto out = gcn_forward(tape.constant(Tensor<double>::matrix(2, 2)), graph, layer.params);
  CHECK(out.value()(1, 0) == 1.5);
  CHECK(out.value()(1, 1) == 2.25);
}

TEST_CASE("gcn shape and graph errors") {
  std::mt19937_64 rng(2);
  auto layer = random_layer(temporal_relation_names(), 3, 3, true, rng);
  const auto graph = random_temporal(4, rng);
  Tape<double> tape;
  CHECK_THROWS_AS(gcn_forward(tape.constant(Tensor<double>::matrix(5, 3)), graph, layer.params), DimensionError);
  CHECK_THROWS_AS(gcn_forward(tape.constant(Tensor<double>::matrix(4, 2)), graph, layer.params), DimensionError);
  auto syn = random_layer(syntactic_relation_names(), 3, 3, true, rng);
  CHECK_THROWS(gcn_forward(tape.constant(Tensor<double>::matrix(4, 3)), graph, syn.params));
  std::vector<GcnLayerParams<double>> bad = {layer.params, random_layer(temporal_relation_names(), 5, 3, true, rng).params};
  CHECK_THROWS_AS(gcn_stack(tape.constant(Tensor<double>::matrix(4, 3)), graph, bad), ConfigError);
  ParameterStore<double> store;
  CHECK_THROWS_AS(make_gcn_layer(store, "x", temporal_relation_names(), 0, 3, true, rng), ConfigError);
}

TEST_CASE("undirected single-relation graphs carry both directions and self-loops") {
  const auto g = undirected_relation_graph(3, {{0, 1}, {1, 0}, {1, 2}});
  CHECK(g.edges.size() == 4 + 3);
  CHECK_THROWS_AS(undirected_relation_graph(2, {{0, 2}}), ValidationError);
}

TEST_CASE("bi-lstm matches the scalar recurrence") {
  std::mt19937_64 rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 9, k = 1 + rng() % 6, r = 1 + rng() % 5;
    ParameterStore<double> store;
    const auto params = make_bilstm(store, "lstm", k, r, rng);
    for (auto& [_, p] : store) p.value = uniform_tensor<double>(p.value.shape(), 1.0, rng);
    const auto x = uniform_tensor<double>({n, k}, 2.0, rng);
    Tape<double> tape;
    std::mt19937_64 unused(0);
    const auto out = bilstm_forward(tape.constant(x), params, 0.8, false, unused);
    REQUIRE(out.value().shape() == Shape{n, 2 * r});

    const auto cell = [&](const LstmCellParams<double>& p, bool reverse) {
      return oracle::lstm(oracle::to_matrix(x), oracle::to_matrix(p.w_input->value),
                          oracle::to_matrix(p.w_hidden->value), oracle::to_matrix(p.bias->value)[0], reverse);
    };
    const auto fwd = cell(params.forward, false);
    const auto bwd = cell(params.backward, true);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t j = 0; j < r; ++j) {
        worst = std::max(worst, std::abs(out.value()(t, j) - fwd[t][j]));
        worst = std::max(worst, std::abs(out.value()(t, r + j) - bwd[t][j]));
      }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("lstm forget-gate bias starts at one") {
  std::mt19937_64 rng(3);
  ParameterStore<double> store;
  const auto p = make_lstm_cell(store, "c", 3, 4, rng);
  for (std::size_t c = 0; c < 16; ++c) CHECK(p.bias->value[c] == (c >= 4 && c < 8 ? 1.0 : 0.0));
}
