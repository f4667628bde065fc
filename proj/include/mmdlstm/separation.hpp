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

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmdlstm/audio.hpp"
#include "mmdlstm/model.hpp"
#include "mmdlstm/stft.hpp"

namespace mmdlstm {

inline constexpr std::array<std::string_view, 4> kSourceNames = {"vocals", "drums", "bass",
                                                                 "other"};
inline constexpr std::string_view kAccompaniment = "accompaniment";

/// Per-source magnitudes [c, f, t] aligned to one mixture; `complex` is
/// filled once a Wiener pass has produced complex estimates.
struct SourceEstimateSet {
  std::vector<std::string> names;
  std::vector<Tensor> magnitudes;
  std::vector<Spectrogram> complex;

  std::size_t size() const { return names.size(); }
  void validate() const;
};

/// mask_j = 1 where source j is strictly the loudest; ties go to the lowest
/// index, so the masks partition every bin.
std::vector<Tensor> ideal_binary_mask(const std::vector<Tensor>& sources);

/// v_j / sum_k v_k per bin; every mask is 1/J where the sum is below `floor`.
std::vector<Tensor> soft_mask(const std::vector<Tensor>& powers, double floor = 1e-30);

struct WienerOptions {
  /// Regularizer eps = eps_scale * mean mixture power.
  double eps_scale = 1e-10;
  /// Forces every spatial covariance to the identity.
  bool identity_covariance = false;
};

/// Single-pass multichannel Wiener filter from magnitude estimates [c, f, t].
/// The part of the mixture the regularized filters leave unassigned is
/// shared out in proportion to source power, so outputs sum to the mixture.
std::vector<Spectrogram> multichannel_wiener(const Spectrogram& mixture,
                                             const std::vector<Tensor>& magnitudes,
                                             const WienerOptions& options = {});

/// w * a + (1 - w) * b on magnitudes.
SourceEstimateSet blend(const SourceEstimateSet& a, const SourceEstimateSet& b, double w);

/// Eval-mode inference in chunks of `chunk_frames` frames (0 = whole input).
Tensor infer_chunked(const Model& model, const Tensor& magnitude, std::size_t chunk_frames);

/// Produces per-source magnitude estimates from the mixture spectrogram.
using Estimator = std::function<SourceEstimateSet(const Spectrogram& mixture)>;

struct SeparateOptions {
  StftConfig stft;
  bool wiener = true;
};

struct SeparatedTrack {
  std::vector<std::string> names;
  std::vector<AudioClip> sources;
  /// mixture - vocals, when vocals are among the sources.
  std::optional<AudioClip> accompaniment;
};

/// STFT -> estimator -> Wiener (or mixture phase) -> iSTFT.
SeparatedTrack separate_track(const Estimator& estimator, const AudioClip& mixture,
                              const SeparateOptions& options = {});

struct SourceModel {
  std::string name;
  const Model* model = nullptr;
  const Model* blend_with = nullptr;
  double blend_weight = 0.5;
};

Estimator model_estimator(std::vector<SourceModel> models, std::size_t chunk_frames = 256);

/// Ideal binary masks from the true sources applied to the mixture magnitude.
Estimator ibm_estimator(std::vector<std::string> names, std::vector<AudioClip> references,
                        const StftConfig& stft);

void write_separated(const std::filesystem::path& dir, const SeparatedTrack& track,
                     WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace mmdlstm
