// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "ndater/parameters.hpp"

namespace ndater {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
struct AdamState {
  struct Moments {
    Tensor<Real> m;
    Tensor<Real> v;
  };
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Moments> moments;
};

// One bias-corrected Adam update over every parameter in the store, using the
// gradients currently held in Parameter::grad.
template <typename Real>
void adam_step(ParameterStore<Real>& params, AdamState<Real>& state) {
  const auto& cfg = state.config;
  const std::uint64_t t = state.step + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& [name, p] : params) {
    if (p.grad.shape() != p.value.shape()) {
      throw DimensionError("adam: gradient " + shape_string(p.grad.shape()) + " does not match parameter '" +
                           name + "' " + shape_string(p.value.shape()));
    }
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments.emplace(name, typename AdamState<Real>::Moments{Tensor<Real>(p.value.shape()),
                                                                         Tensor<Real>(p.value.shape())})
               .first;
    } else if (it->second.m.shape() != p.value.shape()) {
      throw DimensionError("adam: moment shape " + shape_string(it->second.m.shape()) +
                           " does not match parameter '" + name + "' " + shape_string(p.value.shape()));
    }
    auto& m = it->second.m;
    auto& v = it->second.v;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      const double update = cfg.lr * (mi / c1) / (std::sqrt(vi / c2) + cfg.eps);
      p.value[i] = static_cast<Real>(p.value[i] - update);
    }
  }
  state.step = t;
}

}  // namespace ndater
