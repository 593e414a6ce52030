// SPDX-License-Identifier: Apache-2.0
//
// Graph convolution over labeled, directed graphs (optionally edge-gated), the
// bidirectional LSTM context encoder, and average pooling.
#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ndater/autograd.hpp"
#include "ndater/document.hpp"

namespace ndater {

// Weights of one GCN layer, one set per relation class. Weights are stored
// input-major (d_in x d_out) because node features are rows: a message is
// h_u W_l + b_l.
template <typename Real>
struct GcnLayerParams {
  struct Relation {
    Parameter<Real>* weight = nullptr;       // d_in x d_out
    Parameter<Real>* bias = nullptr;         // 1 x d_out
    Parameter<Real>* gate_weight = nullptr;  // d_in x 1, gated layers only
    Parameter<Real>* gate_bias = nullptr;    // 1 x 1, gated layers only
  };

  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool gated = false;
  std::vector<std::string> relation_names;
  std::vector<Relation> relations;

  const Relation* find(const std::string& name) const {
    for (std::size_t i = 0; i < relation_names.size(); ++i)
      if (relation_names[i] == name) return &relations[i];
    return nullptr;
  }
};

// Registers "<prefix>.<relation>.{W,b[,gate_w,gate_b]}" for every relation.
template <typename Real, typename Rng>
GcnLayerParams<Real> make_gcn_layer(ParameterStore<Real>& store, const std::string& prefix,
                                    const std::vector<std::string>& relations, std::size_t in_dim,
                                    std::size_t out_dim, bool gated, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) throw ConfigError("gcn layer '" + prefix + "' needs positive dimensions");
  GcnLayerParams<Real> layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.gated = gated;
  layer.relation_names = relations;
  for (const auto& rel : relations) {
    const std::string base = prefix + "." + rel + ".";
    typename GcnLayerParams<Real>::Relation r;
    r.weight = &store.add(base + "W", xavier_uniform<Real>(in_dim, out_dim, rng));
    r.bias = &store.add(base + "b", Tensor<Real>::matrix(1, out_dim));
    if (gated) {
      r.gate_weight = &store.add(base + "gate_w", xavier_uniform<Real>(in_dim, 1, rng));
      r.gate_bias = &store.add(base + "gate_b", Tensor<Real>::matrix(1, 1));
    }
    layer.relations.push_back(r);
  }
  return layer;
}

// out[v] = sum over edges (u -> v, l) of gate_l[u] * messages_l[u]. Per-relation
// inputs may be absent (empty Var list entry) when the relation is unused.
template <typename Real>
Var<Real> edge_aggregate(const std::vector<std::optional<Var<Real>>>& messages,
                         const std::vector<std::optional<Var<Real>>>& gates, const RelationGraph& graph) {
  const Var<Real>* any = nullptr;
  for (const auto& m : messages)
    if (m) any = &*m;
  if (!any) throw DimensionError("edge_aggregate: no messages");
  Tape<Real>& tape = *any->tape;
  const std::size_t d = any->cols();
  const std::size_t n = graph.node_count;
  const bool gated = !gates.empty();
  for (const auto& e : graph.edges) {
    if (e.relation >= messages.size() || !messages[e.relation]) throw ConfigError("edge_aggregate: missing relation messages");
    if (gated && !gates[e.relation]) throw ConfigError("edge_aggregate: missing relation gates");
  }
  Tensor<Real> out = Tensor<Real>::matrix(n, d);
  for (const auto& e : graph.edges) {
    const auto& m = messages[e.relation]->value();
    const Real g = gated ? gates[e.relation]->value()[e.src] : Real{1};
    for (std::size_t c = 0; c < d; ++c) out(e.dst, c) += g * m(e.src, c);
  }
  std::vector<Var<Real>> parents;
  for (const auto& m : messages)
    if (m) parents.push_back(*m);
  for (const auto& g : gates)
    if (g) parents.push_back(*g);
  return tape.record(std::move(out), parents, [&tape, messages, gates, gated, d, edges = graph.edges](const Tensor<Real>& grad) {
    for (const auto& e : edges) {
      const Var<Real> m = *messages[e.relation];
      const Real g = gated ? gates[e.relation]->value()[e.src] : Real{1};
      if (tape.needs_grad(m)) {
        auto& gm = tape.grad(m);
        for (std::size_t c = 0; c < d; ++c) gm(e.src, c) += g * grad(e.dst, c);
      }
      if (gated && tape.needs_grad(*gates[e.relation])) {
        Real acc{0};
        const auto& mv = m.value();
        for (std::size_t c = 0; c < d; ++c) acc += grad(e.dst, c) * mv(e.src, c);
        tape.grad(*gates[e.relation])[e.src] += acc;
      }
    }
  });
}

enum class GateMode {
  Learned,
  ForceOpen,  // every gate pinned to exactly 1
};

namespace detail {

template <typename Real>
std::vector<std::size_t> relation_slots(const RelationGraph& graph, const GcnLayerParams<Real>& params) {
  std::vector<std::size_t> slot(graph.relations.size(), static_cast<std::size_t>(-1));
  std::vector<bool> used(graph.relations.size(), false);
  for (const auto& e : graph.edges) used.at(e.relation) = true;
  for (std::size_t r = 0; r < graph.relations.size(); ++r) {
    if (!used[r]) continue;
    bool found = false;
    for (std::size_t i = 0; i < params.relation_names.size(); ++i) {
      if (params.relation_names[i] == graph.relations[r]) {
        slot[r] = i;
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("gcn: no parameters for relation '" + graph.relations[r] + "'");
  }
  return slot;
}

inline void require_expanded(const RelationGraph& graph) {
  std::vector<int> loops(graph.node_count, 0);
  for (const auto& e : graph.edges) {
    if (e.src >= graph.node_count || e.dst >= graph.node_count) throw ValidationError("gcn: edge endpoint out of range");
    if (e.src == e.dst) ++loops[e.src];
  }
  for (std::size_t v = 0; v < graph.node_count; ++v) {
    if (loops[v] == 0) throw ValidationError("gcn: node " + std::to_string(v) + " has no self-loop; expand the graph first");
  }
}

}  // namespace detail

// One layer: h_v = ReLU( sum_{(u,v,l) in E'} g_uv * (h_u W_l + b_l) ), with
// g_uv = sigmoid(h_u . w^gate_l + b^gate_l) when the layer is gated and 1
// otherwise. The bias sits inside the sum, once per incoming edge.
template <typename Real>
Var<Real> gcn_forward(Var<Real> h, const RelationGraph& graph, const GcnLayerParams<Real>& params,
                      GateMode gate_mode = GateMode::Learned) {
  if (h.rows() != graph.node_count) {
    throw DimensionError("gcn: " + std::to_string(h.rows()) + " feature rows for a graph of " +
                         std::to_string(graph.node_count) + " nodes");
  }
  if (h.cols() != params.in_dim) {
    throw DimensionError("gcn: input width " + std::to_string(h.cols()) + " but layer expects " +
                         std::to_string(params.in_dim));
  }
  detail::require_expanded(graph);
  Tape<Real>& tape = *h.tape;
  const auto slots = detail::relation_slots(graph, params);
  std::vector<std::optional<Var<Real>>> messages(graph.relations.size());
  std::vector<std::optional<Var<Real>>> gates;
  if (params.gated) gates.resize(graph.relations.size());
  for (std::size_t r = 0; r < graph.relations.size(); ++r) {
    if (slots[r] == static_cast<std::size_t>(-1)) continue;
    const auto& p = params.relations[slots[r]];
    messages[r] = add_bias(matmul(h, tape.param(*p.weight)), tape.param(*p.bias));
    if (!params.gated) continue;
    if (gate_mode == GateMode::ForceOpen) {
      gates[r] = tape.constant(Tensor<Real>::matrix(graph.node_count, 1, Real{1}));
    } else {
      gates[r] = sigmoid(add_bias(matmul(h, tape.param(*p.gate_weight)), tape.param(*p.gate_bias)));
    }
  }
  return relu(edge_aggregate(messages, gates, graph));
}

// Gate value of every edge of `graph` (in edge order) for input features h.
template <typename Real>
std::vector<Real> gcn_edge_gates(const Tensor<Real>& h, const RelationGraph& graph, const GcnLayerParams<Real>& params) {
  if (!params.gated) throw ConfigError("gcn_edge_gates: layer is not gated");
  const auto slots = detail::relation_slots(graph, params);
  std::vector<Real> out;
  out.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    const auto& p = params.relations[slots[e.relation]];
    Real z = p.gate_bias->value[0];
    for (std::size_t c = 0; c < h.cols(); ++c) z += h(e.src, c) * p.gate_weight->value[c];
    out.push_back(detail::stable_sigmoid(z));
  }
  return out;
}

template <typename Real>
Var<Real> gcn_stack(Var<Real> h, const RelationGraph& graph, const std::vector<GcnLayerParams<Real>>& layers,
                    GateMode gate_mode = GateMode::Learned) {
  if (layers.empty()) throw ConfigError("gcn_stack: needs at least one layer");
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k].in_dim != layers[k - 1].out_dim) {
      throw ConfigError("gcn_stack: layer " + std::to_string(k) + " expects width " + std::to_string(layers[k].in_dim) +
                        " but layer " + std::to_string(k - 1) + " produces " + std::to_string(layers[k - 1].out_dim));
    }
  }
  for (const auto& layer : layers) h = gcn_forward(h, graph, layer, gate_mode);
  return h;
}

// Single-relation graph for the plain undirected formulation: each
// undirected edge contributes both directions, plus a self-loop per node.
inline RelationGraph undirected_relation_graph(std::size_t node_count,
                                               const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  RelationGraph g;
  g.node_count = node_count;
  g.relations = {"edge"};
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [u, v] : edges) {
    if (u >= node_count || v >= node_count) throw ValidationError("undirected graph: endpoint out of range");
    if (u == v) continue;
    seen.emplace(u, v);
    seen.emplace(v, u);
  }
  for (std::size_t u = 0; u < node_count; ++u) seen.emplace(u, u);
  for (auto [u, v] : seen) g.edges.push_back({u, v, 0});
  return g;
}

// ---------------------------------------------------------------------------
// Bi-LSTM. Gate columns are ordered [input, forget, output, candidate].

template <typename Real>
struct LstmCellParams {
  Parameter<Real>* w_input = nullptr;   // k x 4r
  Parameter<Real>* w_hidden = nullptr;  // r x 4r
  Parameter<Real>* bias = nullptr;      // 1 x 4r
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
};

template <typename Real>
struct BiLstmParams {
  LstmCellParams<Real> forward;
  LstmCellParams<Real> backward;

  std::size_t output_dim() const { return forward.hidden + backward.hidden; }
};

template <typename Real, typename Rng>
LstmCellParams<Real> make_lstm_cell(ParameterStore<Real>& store, const std::string& prefix, std::size_t input_dim,
                                    std::size_t hidden, Rng& rng) {
  if (input_dim == 0 || hidden == 0) throw ConfigError("lstm '" + prefix + "' needs positive dimensions");
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmCellParams<Real> p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.w_input = &store.add(prefix + ".w_input", uniform_tensor<Real>({input_dim, 4 * hidden}, limit, rng));
  p.w_hidden = &store.add(prefix + ".w_hidden", uniform_tensor<Real>({hidden, 4 * hidden}, limit, rng));
  Tensor<Real> bias = Tensor<Real>::matrix(1, 4 * hidden);
  for (std::size_t c = hidden; c < 2 * hidden; ++c) bias[c] = Real{1};  // forget gate
  p.bias = &store.add(prefix + ".bias", std::move(bias));
  return p;
}

template <typename Real, typename Rng>
BiLstmParams<Real> make_bilstm(ParameterStore<Real>& store, const std::string& prefix, std::size_t input_dim,
                               std::size_t hidden, Rng& rng) {
  return {make_lstm_cell(store, prefix + ".fwd", input_dim, hidden, rng),
          make_lstm_cell(store, prefix + ".bwd", input_dim, hidden, rng)};
}

// Runs one direction over the rows of x; returns n x r hidden states in
// token order.
template <typename Real>
Var<Real> lstm_direction(Var<Real> x, const LstmCellParams<Real>& p, bool reverse) {
  Tape<Real>& tape = *x.tape;
  const std::size_t n = x.rows(), r = p.hidden;
  if (x.cols() != p.input_dim) {
    throw DimensionError("lstm: input width " + std::to_string(x.cols()) + " but cell expects " +
                         std::to_string(p.input_dim));
  }
  const Var<Real> projected = add_bias(matmul(x, tape.param(*p.w_input)), tape.param(*p.bias));
  const Var<Real> w_hidden = tape.param(*p.w_hidden);
  Var<Real> h = tape.constant(Tensor<Real>::matrix(1, r));
  Var<Real> c = tape.constant(Tensor<Real>::matrix(1, r));
  std::vector<Var<Real>> outputs(n);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    const Var<Real> z = add(row(projected, t), matmul(h, w_hidden));
    const Var<Real> in_gate = sigmoid(slice_cols(z, 0, r));
    const Var<Real> forget = sigmoid(slice_cols(z, r, 2 * r));
    const Var<Real> out_gate = sigmoid(slice_cols(z, 2 * r, 3 * r));
    const Var<Real> candidate = tanh(slice_cols(z, 3 * r, 4 * r));
    c = add(mul(forget, c), mul(in_gate, candidate));
    h = mul(out_gate, tanh(c));
    outputs[t] = h;
  }
  return stack_rows(outputs);
}

// Per-token [forward ; backward] states, n x 2r. Dropout with the given keep
// probability is applied to the output while training.
template <typename Real, typename Rng>
Var<Real> bilstm_forward(Var<Real> x, const BiLstmParams<Real>& params, double keep_prob, bool training, Rng& rng) {
  if (x.rows() == 0) throw DimensionError("bilstm: empty sequence");
  const Var<Real> fwd = lstm_direction(x, params.forward, false);
  const Var<Real> bwd = lstm_direction(x, params.backward, true);
  return dropout(concat_cols<Real>({fwd, bwd}), keep_prob, training, rng);
}

template <typename Real>
Var<Real> average_pool(Var<Real> h) {
  return mean_rows(h);
}

}  // namespace ndater
