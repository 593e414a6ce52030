// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient checks for the autograd ops, each layer type
// and the assembled model.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ndater/model.hpp"
#include "ndater/synthetic.hpp"

namespace ndater {

struct GradcheckEntry {
  std::string name;
  std::size_t scalars = 0;
  double max_rel_error = 0.0;
  std::string worst_parameter;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
};

// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares backprop gradients of `loss` w.r.t. every scalar in `store` with
// five-point central differences of step `eps`.
template <typename Real>
GradcheckEntry gradcheck(const std::string& name, ParameterStore<Real>& store,
                         const std::function<Var<Real>(Tape<Real>&)>& loss, double eps) {
  store.zero_grad();
  {
    Tape<Real> tape;
    tape.backward(loss(tape));
  }
  auto evaluate = [&] {
    Tape<Real> tape;
    return static_cast<double>(loss(tape).value()[0]);
  };
  GradcheckEntry entry;
  entry.name = name;
  for (auto& [pname, p] : store) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const Real saved = p.value[i];
      auto at = [&](double offset) {
        p.value[i] = static_cast<Real>(saved + offset);
        return evaluate();
      };
      const double numeric = (-at(2 * eps) + 8 * at(eps) - 8 * at(-eps) + at(-2 * eps)) / (12.0 * eps);
      p.value[i] = saved;
      const double err = relative_error(static_cast<double>(p.grad[i]), numeric);
      if (err > entry.max_rel_error || entry.worst_parameter.empty()) {
        entry.max_rel_error = err;
        entry.worst_parameter = pname + "[" + std::to_string(i) + "]";
      }
      ++entry.scalars;
    }
  }
  return entry;
}

namespace detail {

template <typename Real, typename Rng>
Tensor<Real> random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double limit = 1.0) {
  return uniform_tensor<Real>({rows, cols}, limit, rng);
}

// Random temporal-style graph over `nodes` nodes with `edges` labeled edges,
// expanded and mapped onto the 11 temporal classes.
template <typename Rng>
RelationGraph random_temporal_graph(std::size_t nodes, std::size_t edges, Rng& rng) {
  LabeledGraph g;
  g.node_count = nodes;
  std::uniform_int_distribution<std::size_t> node(0, nodes - 1);
  std::uniform_int_distribution<std::size_t> rel(0, kTemporalRelations.size() - 1);
  for (std::size_t e = 0; e < edges; ++e) {
    const auto u = node(rng);
    auto v = node(rng);
    if (u == v) v = (v + 1) % nodes;
    g.edges.push_back({u, v, std::string(to_string(kTemporalRelations[rel(rng)])), EdgeDirection::Forward});
  }
  return to_relation_graph(expand_edges(g), temporal_relation_names());
}

}  // namespace detail

// Runs every check at width `dims` and returns the per-check maxima.
template <typename Real>
GradcheckReport run_gradcheck_suite(std::size_t dims = 8, std::uint64_t seed = 7) {
  if (dims < 2) throw ConfigError("gradcheck needs dims >= 2");
  const double eps = sizeof(Real) >= 8 ? 1e-4 : 1e-2;
  std::mt19937_64 rng(seed);
  GradcheckReport report;
  auto record = [&](GradcheckEntry e) {
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(std::move(e));
  };
  const std::size_t d = dims;

  {  // elementary ops composed
    ParameterStore<Real> s;
    auto& a = s.add("a", detail::random_tensor<Real>(4, d, rng));
    auto& w = s.add("w", detail::random_tensor<Real>(d, d, rng));
    auto& b = s.add("b", detail::random_tensor<Real>(1, d, rng));
    const Tensor<Real> weights = detail::random_tensor<Real>(1, 3, rng);
    record(gradcheck<Real>("ops", s, [&](Tape<Real>& t) {
      const auto x = add_bias(matmul(t.param(a), t.param(w)), t.param(b));
      const auto left = sigmoid(slice_cols(x, 0, d / 2));
      const auto right = tanh(slice_cols(x, d / 2, d));
      const auto joined = concat_cols<Real>({mul(left, left), scale(right, Real{0.5})});
      const auto pooled = group_mean_rows(joined, {{0, 1}, {2}, {1, 3}});
      const auto stacked = stack_rows<Real>({row(pooled, 2), mean_rows(pooled)});
      const auto logits = slice_cols(matmul(mean_rows(add(stacked, stacked)), t.param(w)), 0, 3);
      return add(softmax_cross_entropy(logits, 1), weighted_sum(logits, weights));
    }, eps));
  }

  auto gcn_case = [&](const std::string& name, bool gated, bool syntactic, int layers) {
    ParameterStore<Real> s;
    const std::size_t n = 5;
    RelationGraph graph;
    if (syntactic) {
      LabeledGraph g;
      g.node_count = n;
      for (std::size_t v = 1; v < n; ++v) g.edges.push_back({v - 1, v, "dep", EdgeDirection::Forward});
      graph = collapse_syntactic_labels(expand_edges(g));
    } else {
      graph = detail::random_temporal_graph(n, 6, rng);
    }
    const auto& names = syntactic ? syntactic_relation_names() : temporal_relation_names();
    auto& input = s.add("input", detail::random_tensor<Real>(n, d, rng));
    std::vector<GcnLayerParams<Real>> stack;
    for (int k = 0; k < layers; ++k) {
      stack.push_back(make_gcn_layer(s, "gcn." + std::to_string(k), names, d, d, gated, rng));
    }
    // Nonzero biases, so the bias path is exercised.
    for (auto& [pname, p] : s) {
      if (pname.size() > 2 && pname.substr(pname.size() - 2) == ".b") p.value = detail::random_tensor<Real>(1, d, rng, 0.5);
    }
    const Tensor<Real> weights = detail::random_tensor<Real>(n, d, rng);
    record(gradcheck<Real>(name, s, [&](Tape<Real>& t) {
      return weighted_sum(gcn_stack(t.param(input), graph, stack), weights);
    }, eps));
  };
  gcn_case("gcn.temporal.gated", true, false, 1);
  gcn_case("gcn.temporal.ungated", false, false, 1);
  gcn_case("gcn.syntactic.gated", true, true, 1);
  gcn_case("gcn.temporal.stack2", true, false, 2);

  {
    ParameterStore<Real> s;
    const std::size_t n = 6;
    auto& input = s.add("input", detail::random_tensor<Real>(n, d, rng));
    const auto params = make_bilstm(s, "bilstm", d, d / 2, rng);
    const Tensor<Real> weights = detail::random_tensor<Real>(n, 2 * (d / 2), rng);
    record(gradcheck<Real>("bilstm", s, [&](Tape<Real>& t) {
      std::mt19937_64 unused(0);
      return weighted_sum(bilstm_forward(t.param(input), params, 1.0, false, unused), weights);
    }, eps));
  }

  auto model_case = [&](const std::string& name, ModelConfig config) {
    // Twelve tokens and four temporal nodes: one offset clause plus the start
    // of a filler sentence.
    const auto doc = truncate(offset_document("gradcheck", 1995, 2, TemporalRelation::After, seed).doc, 12);
    config.dims = {d, d / 2, d, d};
    config.start_year = 1995;
    config.end_year = 1999;
    config.zero_init_classifier = false;
    DatingModel<Real> model(config, Vocabulary::build({doc}), seed);
    for (auto& [pname, p] : model.params()) {
      if (pname.size() > 2 && pname.substr(pname.size() - 2) == ".b" && pname.rfind("classifier", 0) != 0) {
        p.value = detail::random_tensor<Real>(1, p.value.cols(), rng, 0.5);
      }
    }
    const auto prepared = model.prepare(doc);
    record(gradcheck<Real>(name, model.params(), [&](Tape<Real>& t) {
      std::mt19937_64 unused(0);
      return model.loss(t, prepared, false, unused);
    }, eps));
  };
  ModelConfig full;
  full.name = "full";
  model_case("model.full", full);
  ModelConfig deep = full;
  deep.tgcn_layers = 2;
  deep.gating = false;
  model_case("model.k2.ungated", deep);
  return report;
}

}  // namespace ndater
