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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mmdlstm/audio.hpp"
#include "mmdlstm/model.hpp"
#include "mmdlstm/stft.hpp"

namespace mmdlstm {

// --- optimizer --------------------------------------------------------------

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m, v;  // one per parameter, allocated on first step
};

/// Bias-corrected Adam update of every parameter from its gradient. A
/// parameter that has no gradient is treated as having a zero gradient.
void adam_step(const std::vector<Var>& params, AdamState& state);

// --- augmentation -----------------------------------------------------------

struct AugmentConfig {
  bool channel_swap = true;
  bool gain = true;
  bool offsets = true;
  double gain_min = 0.25;
  double gain_max = 1.25;
};

struct AugmentedExample {
  std::vector<AudioClip> sources;
  AudioClip mixture;  // sample-wise sum of `sources`
};

/// Per source: swap stereo channels with probability 1/2, scale by a gain
/// drawn from [gain_min, gain_max], rotate circularly by a random offset.
AugmentedExample augment(const std::vector<AudioClip>& sources, const AugmentConfig& config,
                         std::mt19937_64& rng);

/// Sample-wise sum; clips must agree in shape.
AudioClip mix_sources(const std::vector<AudioClip>& sources);

// --- dataset ----------------------------------------------------------------

/// One track directory: mixture.wav plus one WAV per source.
struct Track {
  std::string name;
  AudioClip mixture;
  std::vector<std::string> source_names;
  std::vector<AudioClip> sources;

  const AudioClip& source(const std::string& name) const;
};

/// Subdirectories holding a mixture.wav, sorted by name.
std::vector<std::filesystem::path> list_tracks(const std::filesystem::path& root);
Track load_track(const std::filesystem::path& dir);

/// Writes `n_tracks` synthetic stereo tracks (16-bit PCM) under `root`:
/// vocals = harmonic tone with vibrato, drums = band-limited noise bursts,
/// bass = low tone, other = chirp. The mixture is the exact integer sum.
void make_toy_dataset(const std::filesystem::path& root, std::uint64_t seed,
                      std::size_t n_tracks, double seconds = 8.0,
                      double sample_rate = 44100.0);

/// Synthesizes one toy track in memory (the samples written to disk).
Track make_toy_track(std::uint64_t seed, std::size_t index, double seconds, double sample_rate);

// --- training ---------------------------------------------------------------

struct TrainConfig {
  std::string source = "vocals";
  std::size_t frames = 256;        // excerpt length in STFT frames
  std::size_t batch = 4;
  std::size_t steps_per_epoch = 100;
  std::size_t epochs = 10;
  AdamConfig adam;
  bool augment = true;
  AugmentConfig augmentation;
  /// > 0: draw this many excerpts once and train on all of them every step.
  std::size_t fixed_excerpts = 0;
  std::uint64_t seed = 0;
};

struct Batch {
  Tensor input;   // [b, c, f, t], scaled magnitudes
  Tensor target;  // same shape
};

/// 1 / RMS of the mixture magnitudes over the given tracks.
double magnitude_scale(const std::vector<Track>& tracks, const StftConfig& stft);

class Trainer {
 public:
  /// The STFT follows the model's fft size with a quarter-size hop.
  Trainer(Model& model, std::vector<Track> tracks, TrainConfig config);

  /// One epoch of steps; returns the loss of every step. Throws
  /// NumericError if a loss is not finite.
  std::vector<double> train_epoch();

  /// Loss of one batch without updating.
  double evaluate(const Batch& batch) const;
  double step(const Batch& batch);
  Batch draw_batch();

  const std::vector<Batch>& fixed_batches() const { return fixed_; }
  const AdamState& state() const { return state_; }
  std::size_t epoch() const { return epoch_; }

 private:
  Batch make_batch(std::size_t size);

  Model& model_;
  std::vector<Track> tracks_;
  TrainConfig config_;
  StftConfig stft_;
  std::mt19937_64 rng_;
  AdamState state_;
  std::vector<Batch> fixed_;
  std::size_t epoch_ = 0;
};

/// Appends "epoch,step,loss" rows, writing the header for a new file.
void append_loss_csv(const std::filesystem::path& path, std::size_t epoch,
                     const std::vector<double>& losses);

}  // namespace mmdlstm
