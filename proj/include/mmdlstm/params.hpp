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

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmdlstm/graph.hpp"

namespace mmdlstm {

/// Named model state in insertion order.
///
/// Parameters are trainable leaves; buffers (batch-norm running statistics)
/// are saved with checkpoints but excluded from parameter counts.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var var;
    bool trainable = true;
  };

  Var add_param(const std::string& name, Tensor value);
  Var add_buffer(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Entry& at(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Var> params() const;

  /// Total trainable scalar count.
  std::size_t count() const;
  /// Trainable scalar count of every parameter whose name starts with `prefix`.
  std::size_t count(const std::string& prefix) const;

  void zero_grad();

 private:
  Var add(const std::string& name, Tensor value, bool trainable);

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Weight initializers. Convolution kernels (regular and transposed) use
/// U(-a, a) with a = sqrt(6 / fan_in); linear and LSTM matrices use
/// a = 1 / sqrt(fan_in). Biases start at zero except the LSTM forget gate,
/// which starts at one.
namespace init {

inline constexpr double kConvGain = 6.0;

Tensor conv_kernel(std::mt19937_64& rng, std::size_t c_out, std::size_t c_in, std::size_t kh,
                   std::size_t kw);
Tensor transposed_kernel(std::mt19937_64& rng, std::size_t c_in, std::size_t c_out);
Tensor dense_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols);
Tensor lstm_bias(std::size_t units);
Tensor uniform(std::mt19937_64& rng, Shape shape, double bound);

}  // namespace init

}  // namespace mmdlstm
