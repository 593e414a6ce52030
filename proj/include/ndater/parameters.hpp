// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ndater/tensor.hpp"

namespace ndater {

template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;
};

// Named learnable tensors. Iteration order is lexicographic by name, which
// fixes the order of optimizer updates and checkpoint records.
template <typename Real>
class ParameterStore {
 public:
  Parameter<Real>& add(const std::string& name, Tensor<Real> init) {
    if (params_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    Tensor<Real> grad(init.shape());
    auto [it, _] = params_.emplace(name, Parameter<Real>{name, std::move(init), std::move(grad)});
    return it->second;
  }

  bool contains(const std::string& name) const { return params_.contains(name); }

  Parameter<Real>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Parameter<Real>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.fill(Real{0});
  }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter<Real>> params_;
};

template <typename Real, typename Rng>
Tensor<Real> xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor<Real> t = Tensor<Real>::matrix(fan_in, fan_out);
  for (auto& v : t.values()) v = static_cast<Real>(dist(rng));
  return t;
}

template <typename Real, typename Rng>
Tensor<Real> uniform_tensor(Shape shape, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<Real>(dist(rng));
  return t;
}

}  // namespace ndater
