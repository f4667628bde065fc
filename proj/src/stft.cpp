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

#include "mmdlstm/stft.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
  }
  return w;
}

std::vector<double> window_square_sum(std::size_t fft_size, std::size_t hop, std::size_t length) {
  const auto w = hann_window(fft_size);
  std::vector<double> acc(length, 0.0);
  for (std::size_t start = 0; start + fft_size <= length; start += hop) {
    for (std::size_t i = 0; i < fft_size; ++i) acc[start + i] += w[i] * w[i];
  }
  return acc;
}

namespace {

void check_config(const StftConfig& config) {
  if (config.fft_size < 2 || config.fft_size % 2 != 0) {
    throw ConfigError("stft: fft size must be even and at least 2");
  }
  if (config.hop == 0 || config.hop > config.fft_size) throw ConfigError("stft: invalid hop");
}

// Leading zeros so every original sample is covered by fft_size / hop frames.
std::size_t front_padding(const StftConfig& c) { return c.fft_size - c.hop; }

std::size_t padded_length(std::size_t length, const StftConfig& c) {
  std::size_t body = front_padding(c) + length + front_padding(c);
  if (body < c.fft_size) body = c.fft_size;
  const std::size_t rem = (body - c.fft_size) % c.hop;
  return rem ? body + (c.hop - rem) : body;
}

}  // namespace

std::size_t stft_frame_count(std::size_t length, const StftConfig& config) {
  check_config(config);
  return (padded_length(length, config) - config.fft_size) / config.hop + 1;
}

Spectrogram Spectrogram::zeros_like() const {
  Spectrogram s = *this;
  std::fill(s.data.begin(), s.data.end(), Complex{});
  return s;
}

Tensor Spectrogram::magnitude() const {
  Tensor mag({channels, bins, frames});
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < bins; ++b) mag[(c * bins + b) * frames + f] = std::abs(at(c, f, b));
  return mag;
}

Spectrogram Spectrogram::with_magnitude(const Tensor& mag) const {
  if (mag.shape() != Shape{channels, bins, frames}) {
    throw ConfigError("with_magnitude: shape " + shape_string(mag.shape()) +
                      " does not match spectrogram");
  }
  Spectrogram s = *this;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < bins; ++b) {
        const double m = mag[(c * bins + b) * frames + f];
        const double phase = std::arg(at(c, f, b));
        s.at(c, f, b) = std::polar(m, phase);
      }
  return s;
}

Spectrogram Spectrogram::masked(const Tensor& mask) const {
  if (mask.shape() != Shape{channels, bins, frames}) {
    throw ConfigError("masked: shape " + shape_string(mask.shape()) + " does not match spectrogram");
  }
  Spectrogram s = *this;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < bins; ++b) s.at(c, f, b) *= mask[(c * bins + b) * frames + f];
  return s;
}

Spectrogram stft(const AudioClip& clip, const StftConfig& config) {
  check_config(config);
  clip.validate();
  if (clip.channels() == 0 || clip.length() == 0) throw InputError("stft: empty clip");
  const std::size_t N = config.fft_size;
  Spectrogram spec;
  spec.channels = clip.channels();
  spec.fft_size = N;
  spec.hop = config.hop;
  spec.bins = N / 2 + 1;
  spec.pad_front = front_padding(config);
  spec.length = clip.length();
  spec.sample_rate = clip.sample_rate;
  const std::size_t padded = padded_length(clip.length(), config);
  spec.frames = (padded - N) / config.hop + 1;
  spec.data.assign(spec.channels * spec.frames * spec.bins, Complex{});

  const auto window = hann_window(N);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(N);
  std::vector<Complex> bins;
  for (std::size_t c = 0; c < spec.channels; ++c) {
    const auto& x = clip.samples[c];
    for (std::size_t f = 0; f < spec.frames; ++f) {
      const std::size_t start = f * config.hop;
      for (std::size_t i = 0; i < N; ++i) {
        const std::size_t p = start + i;
        const double v = (p >= spec.pad_front && p - spec.pad_front < x.size())
                             ? x[p - spec.pad_front]
                             : 0.0;
        frame[i] = v * window[i];
      }
      fft.fwd(bins, frame);
      for (std::size_t b = 0; b < spec.bins; ++b) spec.at(c, f, b) = bins[b];
    }
  }
  return spec;
}

AudioClip istft(const Spectrogram& spec) {
  const std::size_t N = spec.fft_size;
  if (N < 2 || spec.hop == 0 || spec.bins != N / 2 + 1 ||
      spec.data.size() != spec.channels * spec.frames * spec.bins || !(spec.sample_rate > 0.0)) {
    throw ConfigError("istft: inconsistent spectrogram metadata");
  }
  const std::size_t total = (spec.frames - 1) * spec.hop + N;
  if (spec.pad_front + spec.length > total) throw ConfigError("istft: length exceeds frames");
  const auto window = hann_window(N);
  const auto norm = window_square_sum(N, spec.hop, total);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  AudioClip clip = AudioClip::zeros(spec.channels, spec.length, spec.sample_rate);
  std::vector<double> frame;
  std::vector<Complex> bins(spec.bins);
  std::vector<double> acc(total);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t f = 0; f < spec.frames; ++f) {
      for (std::size_t b = 0; b < spec.bins; ++b) bins[b] = spec.at(c, f, b);
      fft.inv(frame, bins, static_cast<Eigen::Index>(N));
      const std::size_t start = f * spec.hop;
      for (std::size_t i = 0; i < N; ++i) acc[start + i] += frame[i] * window[i];
    }
    for (std::size_t i = 0; i < spec.length; ++i) {
      const double w2 = norm[spec.pad_front + i];
      clip.samples[c][i] = w2 > 1e-12 ? acc[spec.pad_front + i] / w2 : 0.0;
    }
  }
  return clip;
}

}  // namespace mmdlstm
