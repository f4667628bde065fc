// Copyright 2026 The mmdlstm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "mmdlstm/error.hpp"
#include "mmdlstm/train.hpp"

namespace mmdlstm {

void adam_step(const std::vector<Var>& params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros_like(p.value()));
      state.v.push_back(Tensor::zeros_like(p.value()));
    }
  }
  if (state.m.size() != params.size()) throw PreconditionError("adam: parameter list changed");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var p = params[i];
    const Tensor& g = p.grad();
    auto value = p.mutable_value().data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double gk = g.empty() ? 0.0 : g[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      value[k] -= c.alpha * (m[k] / corr1) / (std::sqrt(v[k] / corr2) + c.eps);
    }
  }
}

}  // namespace mmdlstm
