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

#include <vector>

#include "mmdlstm/graph.hpp"

/// Differentiable operations. Feature maps are [n, c, f, t]; none of these
/// functions mutate their inputs (batch_norm updates only the running
/// statistics it is handed).
namespace mmdlstm::ops {

enum class Padding { kSame, kValid };

/// Cross-correlation with kernel [c_out, c_in, kh, kw]. `bias` may be empty.
Var conv2d(const Var& x, const Var& kernel, const Var& bias, Padding padding);

enum class BnMode { kTrain, kEval };

/// Views of a layer's running statistics (owned elsewhere).
struct RunningStats {
  Tensor* mean = nullptr;  // [c]
  Tensor* var = nullptr;   // [c], unbiased
  double momentum = 0.1;
};

/// Per-channel standardization over (n, f, t), then gamma * x + beta.
/// Train mode normalizes with batch statistics and folds them into
/// `running` when given; eval mode uses `running`, which must be non-null.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, RunningStats* running,
               double eps, BnMode mode);

Var relu(const Var& x);

/// 2x2 average pooling with stride 2 over (f, t); f and t must be even.
Var downsample2(const Var& x);

/// Stride-2 transposed convolution, kernel [c_in, c_out, 2, 2].
Var upsample2(const Var& x, const Var& kernel, const Var& bias);

/// Affine map over the last axis. weight is [d_out, d_in].
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Concatenation along `axis`; every other axis must match. Inputs whose
/// extent along `axis` is zero contribute nothing.
Var concat(const std::vector<Var>& xs, std::size_t axis);
inline Var concat_channels(const Var& a, const Var& b) { return concat({a, b}, 1); }

/// Elements [begin, end) along `axis`.
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Appends `after` mirrored elements along `axis` (whole-sample symmetric
/// reflection, folded as often as needed; a length-1 axis repeats).
Var reflect_pad(const Var& x, std::size_t axis, std::size_t after);

/// [n, 1, f, t] -> [n, t, f]
Var map_to_sequence(const Var& x);
/// [n, t, f] -> [n, 1, f, t]
Var sequence_to_map(const Var& x);

Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double s);
Var sum(const Var& x);
Var mean(const Var& x);
/// sum(x * weights) for a constant weight tensor.
Var weighted_sum(const Var& x, const Tensor& weights);
/// mean((pred - target)^2)
Var mse_loss(const Var& pred, const Var& target);

}  // namespace mmdlstm::ops
