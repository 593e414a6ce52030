// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over rank-2 tensors. A Tape records every
// operation in execution order; backward() walks it once in reverse, so each
// node is visited exactly once and always after everything that consumed it.
#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ndater/parameters.hpp"
#include "ndater/tensor.hpp"

namespace ndater {

template <typename Real>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Real>
struct Var {
  Tape<Real>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<Real>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename Real>
class Tape {
 public:
  // Receives the gradient flowing into this node's output.
  using Backward = std::function<void(const Tensor<Real>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> constant(Tensor<Real> value) { return push(std::move(value), false, nullptr, {}); }

  // Leaf bound to a parameter: after backward() its gradient is added into
  // parameter.grad.
  Var<Real> param(Parameter<Real>& p) { return push(p.value, true, &p, {}); }

  // Leaf whose gradient is kept on the tape (read back via grad()).
  Var<Real> variable(Tensor<Real> value) { return push(std::move(value), true, nullptr, {}); }

  Var<Real> record(Tensor<Real> value, const std::vector<Var<Real>>& parents, Backward backward) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id].needs_grad;
    }
    return push(std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{});
  }

  bool needs_grad(Var<Real> v) const { return nodes_[v.id].needs_grad; }
  const Tensor<Real>& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of a node; allocated on first use.
  Tensor<Real>& grad(Var<Real> v) {
    auto& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Tensor<Real>(n.value.shape());
    return n.grad;
  }

  void accumulate(Var<Real> v, const Tensor<Real>& g) {
    if (!nodes_[v.id].needs_grad) return;
    grad(v) += g;
  }

  // Seeds d(root)/d(root) = seed for a single-element root and propagates.
  void backward(Var<Real> root, Real seed = Real{1}) {
    check_owner(root);
    if (nodes_[root.id].value.size() != 1) {
      throw DimensionError("backward() needs a scalar root, got " +
                           shape_string(nodes_[root.id].value.shape()));
    }
    if (!nodes_[root.id].needs_grad) return;
    grad(root)[0] += seed;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty()) continue;
      if (n.backward) n.backward(n.grad);
      if (n.param) n.param->grad += n.grad;
    }
  }

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    bool needs_grad = false;
    Parameter<Real>* param = nullptr;
    Backward backward;
  };

  Var<Real> push(Tensor<Real> value, bool needs, Parameter<Real>* p, Backward bw) {
    nodes_.push_back(Node{std::move(value), {}, needs, p, std::move(bw)});
    return Var<Real>{this, nodes_.size() - 1};
  }

  void check_owner(Var<Real> v) const {
    if (v.tape != this || v.id >= nodes_.size()) throw std::logic_error("variable belongs to another tape");
  }

  std::deque<Node> nodes_;
};

namespace detail {

template <typename Real>
using RowMajor = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
Eigen::Map<const RowMajor<Real>> view(const Tensor<Real>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <typename Real>
Eigen::Map<RowMajor<Real>> view(Tensor<Real>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

template <typename Real>
Real stable_sigmoid(Real x) {
  if (x >= 0) return Real{1} / (Real{1} + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real{1} + e);
}

}  // namespace detail

template <typename Real>
Tensor<Real> matmul_values(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string({a.rows(), a.cols()}) +
                         " and " + shape_string({b.rows(), b.cols()}));
  }
  Tensor<Real> out = Tensor<Real>::matrix(a.rows(), b.cols());
  detail::view(out).noalias() = detail::view(a) * detail::view(b);
  return out;
}

template <typename Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  Tape<Real>& tape = *a.tape;
  Tensor<Real> out = matmul_values(a.value(), b.value());
  return tape.record(std::move(out), {a, b}, [&tape, a, b](const Tensor<Real>& g) {
    if (tape.needs_grad(a)) {
      detail::view(tape.grad(a)).noalias() += detail::view(g) * detail::view(b.value()).transpose();
    }
    if (tape.needs_grad(b)) {
      detail::view(tape.grad(b)).noalias() += detail::view(a.value()).transpose() * detail::view(g);
    }
  });
}

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  Tape<Real>& tape = *a.tape;
  Tensor<Real> out = a.value();
  out += b.value();
  return tape.record(std::move(out), {a, b}, [&tape, a, b](const Tensor<Real>& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

// a[m x n] + bias[1 x n], bias broadcast over rows.
template <typename Real>
Var<Real> add_bias(Var<Real> a, Var<Real> bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not broadcast over " +
                         shape_string(a.shape()));
  }
  Tape<Real>& tape = *a.tape;
  Tensor<Real> out = a.value();
  const std::size_t m = out.rows(), n = out.cols();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) += bias.value()[c];
  return tape.record(std::move(out), {a, bias}, [&tape, a, bias, m, n](const Tensor<Real>& g) {
    tape.accumulate(a, g);
    if (tape.needs_grad(bias)) {
      auto& gb = tape.grad(bias);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += g(r, c);
    }
  });
}

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  detail::require_same_shape(a.shape(), b.shape(), "mul");
  Tape<Real>& tape = *a.tape;
  Tensor<Real> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return tape.record(std::move(out), {a, b}, [&tape, a, b](const Tensor<Real>& g) {
    if (tape.needs_grad(a)) {
      auto& ga = tape.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (tape.needs_grad(b)) {
      auto& gb = tape.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

template <typename Real>
Var<Real> scale(Var<Real> a, Real s) {
  Tape<Real>& tape = *a.tape;
  Tensor<Real> out = a.value();
  for (auto& v : out.values()) v *= s;
  return tape.record(std::move(out), {a}, [&tape, a, s](const Tensor<Real>& g) {
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}


namespace detail {

// Elementwise op; `deriv(x, y)` gives dy/dx from the input and output values.
template <typename Real, typename Fwd, typename Deriv>
Var<Real> elementwise(Var<Real> a, Fwd fwd, Deriv deriv) {
  Tape<Real>& tape = *a.tape;
  Tensor<Real> out = a.value();
  for (auto& v : out.values()) v = fwd(v);
  const std::size_t self = tape.size();
  return tape.record(std::move(out), {a}, [&tape, a, self, deriv](const Tensor<Real>& g) {
    const auto& x = a.value();
    const auto& y = tape.value(self);
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace detail

// Subgradient at exactly zero is 0.
template <typename Real>
Var<Real> relu(Var<Real> a) {
  return detail::elementwise(
      a, [](Real x) { return x > Real{0} ? x : Real{0}; },
      [](Real x, Real) { return x > Real{0} ? Real{1} : Real{0}; });
}

template <typename Real>
Var<Real> sigmoid(Var<Real> a) {
  return detail::elementwise(
      a, [](Real x) { return detail::stable_sigmoid(x); },
      [](Real, Real y) { return y * (Real{1} - y); });
}

template <typename Real>
Var<Real> tanh(Var<Real> a) {
  return detail::elementwise(
      a, [](Real x) { return std::tanh(x); }, [](Real, Real y) { return Real{1} - y * y; });
}

// Concatenation along the last axis; all parts share the row count.
template <typename Real>
Var<Real> concat_cols(const std::vector<Var<Real>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape<Real>& tape = *parts.front().tape;
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    total += p.cols();
  }
  Tensor<Real> out = Tensor<Real>::matrix(m, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  return tape.record(std::move(out), parts, [&tape, parts, m](const Tensor<Real>& g) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t n = p.cols();
      if (tape.needs_grad(p)) {
        auto& gp = tape.grad(p);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) gp(r, c) += g(r, off + c);
      }
      off += n;
    }
  });
}

// Columns [begin, end) of a.
template <typename Real>
Var<Real> slice_cols(Var<Real> a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + shape_string(a.shape()));
  }
  Tape<Real>& tape = *a.tape;
  const std::size_t m = a.rows(), n = end - begin;
  Tensor<Real> out = Tensor<Real>::matrix(m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = a.value()(r, begin + c);
  return tape.record(std::move(out), {a}, [&tape, a, begin, m, n](const Tensor<Real>& g) {
    auto& ga = tape.grad(a);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) ga(r, begin + c) += g(r, c);
  });
}

// Output row i is the mean of the rows of `a` listed in groups[i].
// Gathers embeddings when every group has one element; pools when a group
// lists every row.
template <typename Real>
Var<Real> group_mean_rows(Var<Real> a, std::vector<std::vector<std::size_t>> groups) {
  if (groups.empty()) throw DimensionError("group_mean_rows: no groups");
  Tape<Real>& tape = *a.tape;
  const std::size_t n = a.cols();
  Tensor<Real> out = Tensor<Real>::matrix(groups.size(), n);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& grp = groups[i];
    if (grp.empty()) throw DimensionError("group_mean_rows: empty group " + std::to_string(i));
    for (auto r : grp) {
      if (r >= a.rows()) {
        throw IndexError("group_mean_rows: row " + std::to_string(r) + " out of range for " +
                         shape_string(a.shape()));
      }
      for (std::size_t c = 0; c < n; ++c) out(i, c) += a.value()(r, c);
    }
    const Real inv = Real{1} / static_cast<Real>(grp.size());
    for (std::size_t c = 0; c < n; ++c) out(i, c) *= inv;
  }
  return tape.record(std::move(out), {a}, [&tape, a, n, groups = std::move(groups)](const Tensor<Real>& g) {
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const Real inv = Real{1} / static_cast<Real>(groups[i].size());
      for (auto r : groups[i])
        for (std::size_t c = 0; c < n; ++c) ga(r, c) += g(i, c) * inv;
    }
  });
}

template <typename Real>
Var<Real> gather_rows(Var<Real> table, const std::vector<std::size_t>& ids) {
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(ids.size());
  for (auto id : ids) groups.push_back({id});
  return group_mean_rows(table, std::move(groups));
}

template <typename Real>
Var<Real> mean_rows(Var<Real> a) {
  std::vector<std::size_t> all(a.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return group_mean_rows(a, {std::move(all)});
}

template <typename Real>
Var<Real> row(Var<Real> a, std::size_t r) {
  return group_mean_rows(a, {{r}});
}

// Stacks 1 x n rows into an m x n matrix.
template <typename Real>
Var<Real> stack_rows(const std::vector<Var<Real>>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  Tape<Real>& tape = *rows.front().tape;
  const std::size_t n = rows.front().cols();
  Tensor<Real> out = Tensor<Real>::matrix(rows.size(), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rows() != 1 || rows[i].cols() != n) {
      throw DimensionError("stack_rows: expected 1x" + std::to_string(n) + " row, got " +
                           shape_string(rows[i].shape()));
    }
    for (std::size_t c = 0; c < n; ++c) out(i, c) = rows[i].value()[c];
  }
  return tape.record(std::move(out), rows, [&tape, rows, n](const Tensor<Real>& g) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!tape.needs_grad(rows[i])) continue;
      auto& gr = tape.grad(rows[i]);
      for (std::size_t c = 0; c < n; ++c) gr[c] += g(i, c);
    }
  });
}

template <typename Real>
Var<Real> sum(Var<Real> a) {
  Tape<Real>& tape = *a.tape;
  Real total{0};
  for (auto v : a.value().values()) total += v;
  return tape.record(Tensor<Real>::matrix(1, 1, total), {a}, [&tape, a](const Tensor<Real>& g) {
    auto& ga = tape.grad(a);
    for (auto& v : ga.values()) v += g[0];
  });
}

// sum_i a_i * w_i for a constant weight tensor; turns any tensor-valued
// output into a scalar for gradient checks.
template <typename Real>
Var<Real> weighted_sum(Var<Real> a, const Tensor<Real>& weights) {
  detail::require_same_shape(a.shape(), weights.shape(), "weighted_sum");
  Tape<Real>& tape = *a.tape;
  Real total{0};
  for (std::size_t i = 0; i < weights.size(); ++i) total += a.value()[i] * weights[i];
  return tape.record(Tensor<Real>::matrix(1, 1, total), {a}, [&tape, a, weights](const Tensor<Real>& g) {
    auto& ga = tape.grad(a);
    for (std::size_t i = 0; i < weights.size(); ++i) ga[i] += g[0] * weights[i];
  });
}

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const Real mx = *std::max_element(out.begin(), out.end());
  Real z{0};
  for (auto& v : out) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : out) v /= z;
  return out;
}

// -log softmax(logits)[label] for a 1 x C row of logits.
template <typename Real>
Var<Real> softmax_cross_entropy(Var<Real> logits, std::size_t label) {
  if (logits.rows() != 1) {
    throw DimensionError("softmax_cross_entropy: expected one row of logits, got " +
                         shape_string(logits.shape()));
  }
  const std::size_t classes = logits.cols();
  if (label >= classes) {
    throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                     std::to_string(classes) + ")");
  }
  Tape<Real>& tape = *logits.tape;
  const auto& x = logits.value();
  const Real mx = *std::max_element(x.values().begin(), x.values().end());
  Real z{0};
  for (auto v : x.values()) z += std::exp(v - mx);
  const Real loss = std::log(z) + mx - x[label];
  auto probs = softmax<Real>(x.values());
  return tape.record(Tensor<Real>::matrix(1, 1, loss), {logits},
                     [&tape, logits, label, probs = std::move(probs)](const Tensor<Real>& g) {
                       auto& gl = tape.grad(logits);
                       for (std::size_t c = 0; c < probs.size(); ++c) {
                         gl[c] += g[0] * (probs[c] - (c == label ? Real{1} : Real{0}));
                       }
                     });
}

// Inverted dropout: survivors are scaled by 1/keep_prob while training, so
// inference is the identity.
template <typename Real, typename Rng>
Var<Real> dropout(Var<Real> a, double keep_prob, bool training, Rng& rng) {
  if (!(keep_prob > 0.0) || keep_prob > 1.0) {
    throw ConfigError("dropout keep probability must lie in (0, 1], got " + std::to_string(keep_prob));
  }
  if (!training || keep_prob == 1.0) return a;
  Tape<Real>& tape = *a.tape;
  std::bernoulli_distribution keep(keep_prob);
  const Real s = static_cast<Real>(1.0 / keep_prob);
  Tensor<Real> mask(a.shape());
  for (auto& m : mask.values()) m = keep(rng) ? s : Real{0};
  return mul(a, tape.constant(std::move(mask)));
}

}  // namespace ndater
