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

#include <complex>
#include <string>
#include <vector>

#include "mmdlstm/audio.hpp"
#include "mmdlstm/tensor.hpp"

namespace mmdlstm {

using Complex = std::complex<double>;

struct StftConfig {
  std::size_t fft_size = 4096;
  std::size_t hop = 1024;  // 75% overlap
};

/// Complex STFT, stored [channel][frame][bin] with bins = fft_size / 2 + 1.
///
/// The analysed signal is the clip with `pad_front` zeros prepended and
/// zeros appended up to a whole number of hops; synthesis drops the padding
/// and returns `length` samples.
struct Spectrogram {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t fft_size = 0;
  std::size_t hop = 0;
  std::size_t pad_front = 0;
  std::size_t length = 0;
  double sample_rate = 0.0;
  std::string window = "hann-periodic";
  std::vector<Complex> data;

  Complex& at(std::size_t c, std::size_t frame, std::size_t bin) {
    return data[(c * frames + frame) * bins + bin];
  }
  const Complex& at(std::size_t c, std::size_t frame, std::size_t bin) const {
    return data[(c * frames + frame) * bins + bin];
  }

  /// Same metadata, zero bins.
  Spectrogram zeros_like() const;
  /// |X| as a [channels, bins, frames] tensor (model layout).
  Tensor magnitude() const;
  /// Magnitudes from `mag` [channels, bins, frames] with this spectrogram's phase.
  Spectrogram with_magnitude(const Tensor& mag) const;
  /// Element-wise product with real per-bin gains [channels, bins, frames].
  Spectrogram masked(const Tensor& mask) const;
};

/// Periodic raised-cosine (Hann) window, w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_window(std::size_t n);

/// Overlap-added squared window over `length` samples, frames every `hop`.
std::vector<double> window_square_sum(std::size_t fft_size, std::size_t hop, std::size_t length);

/// Frames for a padded signal: (padded_len - N) / hop + 1.
std::size_t stft_frame_count(std::size_t length, const StftConfig& config);

Spectrogram stft(const AudioClip& clip, const StftConfig& config = {});

/// Weighted overlap-add with the same window, normalized by the squared-window sum.
AudioClip istft(const Spectrogram& spec);

}  // namespace mmdlstm
