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

#include <cmath>
#include <fstream>

#include "mmdlstm/error.hpp"
#include "mmdlstm/train.hpp"

namespace mmdlstm {

double magnitude_scale(const std::vector<Track>& tracks, const StftConfig& stft_config) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& t : tracks) {
    const Tensor m = stft(t.mixture, stft_config).magnitude();
    for (double v : m.data()) acc += v * v;
    count += m.size();
  }
  if (count == 0 || acc <= 0.0) return 1.0;
  return 1.0 / std::sqrt(acc / static_cast<double>(count));
}

Trainer::Trainer(Model& model, std::vector<Track> tracks, TrainConfig config)
    : model_(model), tracks_(std::move(tracks)), config_(std::move(config)), rng_(config_.seed) {
  if (tracks_.empty()) throw InputError("train: empty dataset");
  if (config_.frames < model_.spec().time_multiple()) {
    throw ConfigError("train: excerpts need at least " +
                      std::to_string(model_.spec().time_multiple()) + " frames");
  }
  if ((config_.frames + 1) * (model_.spec().fft_size / 4) <= model_.spec().fft_size) {
    throw ConfigError("train: excerpts are too short for the STFT size");
  }
  if (config_.batch == 0) throw ConfigError("train: batch size must be positive");
  for (const auto& t : tracks_) t.source(config_.source);
  stft_.fft_size = model_.spec().fft_size;
  stft_.hop = stft_.fft_size / 4;
  state_.config = config_.adam;
  if (config_.fixed_excerpts > 0) fixed_.push_back(make_batch(config_.fixed_excerpts));
}

Batch Trainer::make_batch(std::size_t size) {
  const std::size_t C = static_cast<std::size_t>(model_.spec().channels);
  const std::size_t F = model_.spec().bins();
  const std::size_t T = config_.frames;
  // Sample count whose padded STFT has exactly T frames.
  const std::size_t len = (T + 1) * stft_.hop - stft_.fft_size;
  const double scale = model_.input_scale();
  Batch b{Tensor({size, C, F, T}), Tensor({size, C, F, T})};
  for (std::size_t item = 0; item < size; ++item) {
    const Track& track =
        tracks_[std::uniform_int_distribution<std::size_t>(0, tracks_.size() - 1)(rng_)];
    const std::size_t total = track.mixture.length();
    const std::size_t start =
        total > len ? std::uniform_int_distribution<std::size_t>(0, total - len)(rng_) : 0;
    std::vector<AudioClip> excerpt;
    std::size_t target = 0;
    for (std::size_t j = 0; j < track.sources.size(); ++j) {
      if (track.source_names[j] == config_.source) target = j;
      AudioClip clip = AudioClip::zeros(track.sources[j].channels(), len,
                                        track.sources[j].sample_rate);
      for (std::size_t c = 0; c < clip.channels(); ++c) {
        for (std::size_t n = 0; n < len && start + n < total; ++n) {
          clip.samples[c][n] = track.sources[j].samples[c][start + n];
        }
      }
      excerpt.push_back(std::move(clip));
    }
    AugmentedExample ex;
    if (config_.augment) {
      ex = augment(excerpt, config_.augmentation, rng_);
    } else {
      ex.mixture = mix_sources(excerpt);
      ex.sources = std::move(excerpt);
    }
    if (ex.mixture.channels() != C) throw InputError("train: track channel count differs from model");
    const Tensor mix = stft(ex.mixture, stft_).magnitude();
    const Tensor tgt = stft(ex.sources[target], stft_).magnitude();
    if (mix.shape() != Shape{C, F, T}) throw InputError("train: unexpected excerpt spectrogram shape");
    const std::size_t plane = C * F * T;
    for (std::size_t i = 0; i < plane; ++i) {
      b.input[item * plane + i] = mix[i] * scale;
      b.target[item * plane + i] = tgt[i] * scale;
    }
  }
  return b;
}

Batch Trainer::draw_batch() {
  if (!fixed_.empty()) return fixed_.front();
  return make_batch(config_.batch);
}

double Trainer::evaluate(const Batch& batch) const {
  NoGradGuard guard;
  const Var pred = model_.forward(constant(batch.input), {ops::BnMode::kEval, nullptr});
  return ops::mse_loss(pred, constant(batch.target)).value()[0];
}

double Trainer::step(const Batch& batch) {
  model_.store().zero_grad();
  const Var pred = model_.forward(constant(batch.input), {ops::BnMode::kTrain, nullptr});
  const Var loss = ops::mse_loss(pred, constant(batch.target));
  const double value = loss.value()[0];
  if (!std::isfinite(value)) {
    throw NumericError("train: non-finite loss at step " + std::to_string(state_.step + 1));
  }
  backward(loss);
  adam_step(model_.store().params(), state_);
  return value;
}

std::vector<double> Trainer::train_epoch() {
  std::vector<double> losses;
  for (std::size_t s = 0; s < config_.steps_per_epoch; ++s) losses.push_back(step(draw_batch()));
  ++epoch_;
  return losses;
}

void append_loss_csv(const std::filesystem::path& path, std::size_t epoch,
                     const std::vector<double>& losses) {
  const bool fresh = !std::filesystem::exists(path);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw InputError("cannot write " + path.string());
  if (fresh) out << "epoch,step,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < losses.size(); ++i) out << epoch << ',' << i << ',' << losses[i] << '\n';
}

}  // namespace mmdlstm
