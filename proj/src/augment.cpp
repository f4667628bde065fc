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

#include <algorithm>

#include "mmdlstm/error.hpp"
#include "mmdlstm/train.hpp"

namespace mmdlstm {

AudioClip mix_sources(const std::vector<AudioClip>& sources) {
  if (sources.empty()) throw InputError("mix: no sources");
  AudioClip mix = AudioClip::zeros(sources.front().channels(), sources.front().length(),
                                   sources.front().sample_rate);
  for (const auto& s : sources) {
    if (s.channels() != mix.channels() || s.length() != mix.length()) {
      throw InputError("mix: sources differ in shape");
    }
    for (std::size_t c = 0; c < s.channels(); ++c) {
      for (std::size_t n = 0; n < s.length(); ++n) mix.samples[c][n] += s.samples[c][n];
    }
  }
  return mix;
}

AugmentedExample augment(const std::vector<AudioClip>& sources, const AugmentConfig& config,
                         std::mt19937_64& rng) {
  AugmentedExample out;
  std::uniform_real_distribution<double> gain(config.gain_min, config.gain_max);
  std::bernoulli_distribution coin(0.5);
  for (const auto& src : sources) {
    src.validate();
    AudioClip a = src;
    // Draws happen whether or not a switch is on, so toggling one switch
    // does not shift the random stream of the others.
    const bool swap = coin(rng);
    const double g = gain(rng);
    const std::size_t len = a.length();
    const std::size_t shift =
        len == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
    if (config.channel_swap && swap && a.channels() == 2) std::swap(a.samples[0], a.samples[1]);
    if (config.gain) {
      for (auto& ch : a.samples) {
        for (double& x : ch) x *= g;
      }
    }
    if (config.offsets && shift != 0) {
      for (auto& ch : a.samples) {
        std::rotate(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(shift), ch.end());
      }
    }
    out.sources.push_back(std::move(a));
  }
  out.mixture = mix_sources(out.sources);
  return out;
}

}  // namespace mmdlstm
