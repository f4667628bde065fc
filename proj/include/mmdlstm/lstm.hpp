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

#include "mmdlstm/graph.hpp"

namespace mmdlstm::ops {

/// Weights of one LSTM direction. Gate rows are stacked in the order
/// input, forget, candidate, output, so every matrix has 4*units rows.
struct LstmDirection {
  Var w_input;      // [4m, d]
  Var w_recurrent;  // [4m, m]
  Var bias;         // [4m]

  std::size_t units() const { return w_recurrent.value().dim(1); }
  std::size_t input_size() const { return w_input.value().dim(1); }
};

/// Bidirectional LSTM over x [n, T, d]. The backward direction runs on the
/// time-reversed sequence and its outputs are re-reversed, so step t of the
/// result is [h_fwd(t) | h_bwd(t)], shape [n, T, 2m]. Zero initial state.
Var bilstm(const Var& x, const LstmDirection& forward, const LstmDirection& backward);

}  // namespace mmdlstm::ops
