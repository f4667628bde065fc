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

#include "mmdlstm/params.hpp"

#include <cmath>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

Var ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Var v = trainable ? leaf(std::move(value)) : constant(std::move(value));
  index_[name] = entries_.size();
  entries_.push_back({name, v, trainable});
  return v;
}

Var ParamStore::add_param(const std::string& name, Tensor value) {
  return add(name, std::move(value), true);
}

Var ParamStore::add_buffer(const std::string& name, Tensor value) {
  return add(name, std::move(value), false);
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return entries_[it->second];
}

std::vector<Var> ParamStore::params() const {
  std::vector<Var> out;
  for (const auto& e : entries_) {
    if (e.trainable) out.push_back(e.var);
  }
  return out;
}

std::size_t ParamStore::count() const { return count(""); }

std::size_t ParamStore::count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable && e.name.compare(0, prefix.size(), prefix) == 0) n += e.var.value().size();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

namespace init {

Tensor uniform(std::mt19937_64& rng, Shape shape, double bound) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

Tensor conv_kernel(std::mt19937_64& rng, std::size_t c_out, std::size_t c_in, std::size_t kh,
                   std::size_t kw) {
  const double fan_in = double(c_in * kh * kw);
  return uniform(rng, {c_out, c_in, kh, kw}, std::sqrt(kConvGain / fan_in));
}

Tensor transposed_kernel(std::mt19937_64& rng, std::size_t c_in, std::size_t c_out) {
  // Each output pixel sees exactly c_in inputs.
  return uniform(rng, {c_in, c_out, 2, 2}, std::sqrt(kConvGain / double(c_in)));
}

Tensor dense_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  return uniform(rng, {rows, cols}, 1.0 / std::sqrt(double(cols)));
}

Tensor lstm_bias(std::size_t units) {
  Tensor b({4 * units});
  for (std::size_t u = 0; u < units; ++u) b[units + u] = 1.0;
  return b;
}

}  // namespace init

}  // namespace mmdlstm
