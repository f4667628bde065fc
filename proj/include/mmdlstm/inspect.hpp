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

#include <string>
#include <vector>

#include "mmdlstm/model.hpp"

namespace mmdlstm {

struct ParamItem {
  std::string path;  // "band1/d4/lstm", "full/stem", "final/out"
  std::size_t count = 0;
};

/// Trainable parameters grouped by component, in construction order.
std::vector<ParamItem> itemize_params(const Model& model);

struct LstmBlockCount {
  std::string path;
  std::size_t c_in = 0, freq = 0, units = 0;
  std::size_t count = 0;
};

/// Closed-form count of every LSTM block, derived from the architecture's channel
/// arithmetic alone (no model is built).
std::vector<LstmBlockCount> lstm_block_counts(const ArchSpec& spec);
std::size_t lstm_total(const ArchSpec& spec);

/// Receptive field along time, in frames. LSTM blocks see the whole
/// sequence and are not counted; `global` notes that one is present.
struct NetField {
  std::string name;
  std::size_t frames = 0;
  bool global = false;
};

struct ReceptiveField {
  std::vector<NetField> nets;  // bands then full band
  std::size_t overall = 0;     // after the final dense block
  bool global = false;
};

ReceptiveField receptive_field(const ArchSpec& spec);
/// Same accumulation for a single sub-network.
NetField receptive_field(const NetSpec& net);

struct ChannelNorm {
  double rms = 0.0;
  bool lstm = false;
};

/// Root-mean-square of every channel of `slot`'s output (e.g. "band1/d4")
/// for an eval-mode pass on magnitude `input` [c, f, t] (already scaled).
std::vector<ChannelNorm> feature_map_norms(const Model& model, const Tensor& input,
                                           const std::string& slot);

}  // namespace mmdlstm
