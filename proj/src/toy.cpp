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

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "mmdlstm/separation.hpp"
#include "mmdlstm/train.hpp"

namespace mmdlstm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Rounds to the 16-bit grid so the written file holds exactly these values.
void quantize(AudioClip& clip) {
  for (auto& ch : clip.samples) {
    for (double& x : ch) x = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0) / 32768.0;
  }
}

std::vector<double> band_noise(std::mt19937_64& rng, std::size_t n, double lo, double hi,
                               double sr) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = normal(rng);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(std::min(k, n - k)) * sr / static_cast<double>(n);
    if (f < lo || f > hi) spec[k] = 0.0;
  }
  fft.inv(x, spec);
  double rms = 0.0;
  for (double v : x) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(n));
  for (double& v : x) v /= (rms > 0.0 ? rms : 1.0);
  return x;
}

}  // namespace

Track make_toy_track(std::uint64_t seed, std::size_t index, double seconds, double sr) {
  std::mt19937_64 rng(seed * 1000003ULL + index);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));

  Track t;
  t.name = "track_" + std::string(index < 10 ? "0" : "") + std::to_string(index);
  for (auto name : kSourceNames) t.source_names.emplace_back(name);
  std::vector<AudioClip> src(4, AudioClip::zeros(2, n, sr));

  // vocals: six harmonics with vibrato
  const double f0 = 220.0 + 110.0 * u(rng);
  const double pan_v = 0.35 + 0.3 * u(rng);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / sr;
    phase += kTwoPi * f0 * (1.0 + 0.01 * std::sin(kTwoPi * 5.0 * time)) / sr;
    double v = 0.0;
    for (int h = 1; h <= 6; ++h) v += std::sin(h * phase) / h;
    const double env = 0.6 + 0.4 * std::sin(kTwoPi * 0.5 * time);
    src[0].samples[0][i] = 0.12 * env * v * (1.0 - pan_v);
    src[0].samples[1][i] = 0.12 * env * v * pan_v;
  }

  // drums: 5-10 kHz noise bursts on a fixed pulse
  const double tempo = 0.25 + 0.25 * u(rng);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto noise = band_noise(rng, n, 5000.0, 10000.0, sr);
    for (std::size_t i = 0; i < n; ++i) {
      const double since = std::fmod(static_cast<double>(i) / sr, tempo);
      src[1].samples[c][i] = 0.08 * std::exp(-since / 0.04) * noise[i];
    }
  }

  // bass: one low tone
  const double fb = 55.0 + 55.0 * u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = 0.15 * std::sin(kTwoPi * fb * static_cast<double>(i) / sr);
    src[2].samples[0][i] = v;
    src[2].samples[1][i] = v;
  }

  // other: 12-16 kHz sweep repeating every `period` seconds
  const double period = 1.0 + u(rng);
  const double pan_o = 0.3 + 0.4 * u(rng);
  phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = std::fmod(static_cast<double>(i) / sr, period) / period;
    phase += kTwoPi * (12000.0 + 4000.0 * frac) / sr;
    const double v = 0.08 * std::sin(phase);
    src[3].samples[0][i] = v * (1.0 - pan_o);
    src[3].samples[1][i] = v * pan_o;
  }

  for (auto& s : src) quantize(s);
  t.mixture = mix_sources(src);  // exact: every term sits on the 1/32768 grid
  t.sources = std::move(src);
  return t;
}

void make_toy_dataset(const std::filesystem::path& root, std::uint64_t seed,
                      std::size_t n_tracks, double seconds, double sample_rate) {
  for (std::size_t i = 0; i < n_tracks; ++i) {
    const Track t = make_toy_track(seed, i, seconds, sample_rate);
    const auto dir = root / t.name;
    write_wav(dir / "mixture.wav", t.mixture, WavEncoding::kPcm16);
    for (std::size_t j = 0; j < t.sources.size(); ++j) {
      write_wav(dir / (t.source_names[j] + ".wav"), t.sources[j], WavEncoding::kPcm16);
    }
  }
}

}  // namespace mmdlstm
