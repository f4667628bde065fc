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
#include <vector>

namespace mmdlstm {

/// Multichannel audio, channels x samples.
struct AudioClip {
  std::vector<std::vector<double>> samples;
  double sample_rate = 44100.0;

  std::size_t channels() const { return samples.size(); }
  std::size_t length() const { return samples.empty() ? 0 : samples.front().size(); }

  static AudioClip zeros(std::size_t channels, std::size_t length, double sample_rate);

  /// Throws InputError unless channels agree in length and sample_rate > 0.
  void validate() const;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads 16-bit PCM or 32-bit float RIFF/WAVE files with 1 or 2 channels.
AudioClip read_wav(const std::filesystem::path& path);

/// PCM16 output is rounded and clipped to [-1, 1).
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace mmdlstm
