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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmdlstm/graph.hpp"

namespace mmdlstm {

struct GradCheckOptions {
  double step = 1e-5;          // h = step * max(1, |value|)
  double tolerance = 1e-4;     // on the relative error below
  double floor = 1e-6;         // relative error = |a - n| / max(|a|, |n|, floor)
  /// Raises the floor to this fraction of the largest analytic gradient
  /// entry, for losses whose gradients are structurally zero in places
  /// (a bias feeding batch normalization).
  double scale_floor = 0.0;
  std::size_t max_coords = 0;  // per tensor; 0 checks every coordinate
  std::uint64_t seed = 0;      // picks the sampled coordinates
  /// Skips coordinates whose left and right one-sided differences disagree
  /// by more than the tolerance: the perturbation crossed a relu kink, so
  /// the central difference is not a derivative estimate there.
  bool skip_kinks = false;
  /// Applied to the analytic gradients before comparison (negative controls).
  std::function<void(std::vector<Tensor>&)> tamper;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // kink crossings (skip_kinks only)
  std::string worst_name;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

using NamedVar = std::pair<std::string, Var>;

/// Central-difference check of d(loss)/d(var) for every listed leaf.
/// `build_loss` must rebuild the scalar loss from the current leaf values
/// and be deterministic. Leaf values are restored afterwards.
GradCheckReport grad_check(const std::function<Var()>& build_loss,
                           const std::vector<NamedVar>& vars, const GradCheckOptions& options = {});

}  // namespace mmdlstm
