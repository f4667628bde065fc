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

#include <filesystem>
#include <string>

#include "mmdlstm/model.hpp"

namespace mmdlstm {

/// File layout:
///   line 1   "mmdlstm-checkpoint 1"
///   line 2   manifest byte length
///   manifest JSON: format, endianness ("little"), precision ("float64"),
///            arch (canonical config text), arch_hash, seed, ablate_lstm,
///            source, input_scale, tensors [{name, kind, shape, offset, bytes}]
///   payload  raw little-endian IEEE-754 doubles, tensors back to back;
///            offsets are relative to the payload start.
struct CheckpointInfo {
  std::string source;  // target source the model was trained for
};

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CheckpointInfo& info = {});

struct LoadedCheckpoint {
  Model model;
  CheckpointInfo info;
};

/// Rebuilds the model from the stored architecture and copies every tensor.
/// Throws InputError on unreadable or truncated files and ConfigError when
/// the manifest disagrees with the rebuilt model.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mmdlstm
