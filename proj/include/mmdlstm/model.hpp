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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mmdlstm/arch.hpp"
#include "mmdlstm/lstm.hpp"
#include "mmdlstm/ops.hpp"
#include "mmdlstm/params.hpp"

namespace mmdlstm {

inline constexpr double kBatchNormEps = 1e-5;
/// Initial output-head bias, in input-scaled magnitude units (the output
/// head kernel starts at zero).
inline constexpr double kHeadBiasInit = 0.25;

/// Records the output of one slot during a forward pass ("band1/d4").
struct SlotCapture {
  std::string slot;
  bool found = false;
  Tensor value;                              // slot output [n, c, f, t]
  std::optional<std::size_t> lstm_channel;   // index of the LSTM map, if it is in the output
};

struct ForwardOptions {
  ops::BnMode mode = ops::BnMode::kEval;
  SlotCapture* capture = nullptr;
};

/// A directed connection in the built network, used for structural checks.
struct WiringEdge {
  std::string from;
  std::string to;
  bool operator==(const WiringEdge&) const = default;
};

struct ChannelInfo {
  std::string path;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct Wiring {
  std::vector<WiringEdge> edges;
  std::vector<ChannelInfo> channels;

  bool has_edge(const std::string& from, const std::string& to) const;
  const ChannelInfo& at(const std::string& path) const;
};

/// BN -> ReLU -> 3x3 conv producing `growth` maps.
class DenseLayer {
 public:
  DenseLayer(ParamStore& store, const std::string& prefix, std::size_t c_in, std::size_t growth,
             std::mt19937_64& rng);
  Var forward(const Var& x, ops::BnMode mode) const;
  std::size_t in_channels() const { return c_in_; }

 private:
  std::size_t c_in_;
  Var gamma_, beta_, running_mean_, running_var_, kernel_, bias_;
};

/// Densely connected block: layer j sees the block input concatenated with
/// every earlier layer output. The block emits the concatenation of its
/// layer outputs (l * k maps); with l = 0 it passes its input through.
class DenseBlock {
 public:
  DenseBlock(ParamStore& store, const std::string& prefix, std::size_t c_in, int layers,
             int growth, std::mt19937_64& rng);
  Var forward(const Var& x, ops::BnMode mode) const;
  std::size_t in_channels() const { return c_in_; }
  std::size_t out_channels() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::size_t c_in_;
  std::size_t growth_;
  std::vector<DenseLayer> layers_;
};

/// 1x1 conv to one map, bidirectional LSTM along time over frequency
/// vectors, linear map back to the frequency size. Emits [n, 1, f, t].
class LstmBlock {
 public:
  /// `ablated` builds a parameter-free stand-in that emits zeros.
  LstmBlock(ParamStore& store, const std::string& prefix, std::size_t c_in, std::size_t freq,
            std::size_t units_per_direction, std::mt19937_64& rng, bool ablated = false);
  Var forward(const Var& x) const;
  std::size_t freq() const { return freq_; }
  std::size_t units_per_direction() const { return units_; }

  /// (c_in + 1) + 8 (m f + m^2 + m) + (2 m f + f) for m units per direction.
  static std::size_t parameter_count(std::size_t c_in, std::size_t freq, std::size_t units);

 private:
  std::size_t c_in_, freq_, units_;
  bool ablated_;
  Var conv_kernel_, conv_bias_;
  ops::LstmDirection fwd_, bwd_;
  Var out_weight_, out_bias_;
};

/// One table column: a dense block, an LSTM block, or both combined per
/// CombinationMode.
class Slot {
 public:
  Slot(ParamStore& store, const std::string& path, const SlotSpec& spec, CombinationMode mode,
       LstmUnitsMode units_mode, std::size_t c_in, std::size_t freq, int growth,
       std::mt19937_64& rng, bool ablate_lstm);
  Var forward(const Var& x, const ForwardOptions& opts) const;
  std::size_t in_channels() const { return c_in_; }
  std::size_t out_channels() const { return c_out_; }
  const std::string& path() const { return path_; }
  const SlotSpec& spec() const { return spec_; }
  /// Position of the LSTM map in the output, when it is there.
  std::optional<std::size_t> lstm_channel() const;
  void describe(Wiring& wiring) const;

 private:
  std::string path_;
  SlotSpec spec_;
  CombinationMode mode_;
  std::size_t c_in_ = 0, c_out_ = 0;
  std::optional<DenseBlock> dense_;
  std::optional<LstmBlock> lstm_;
};

/// Multi-scale densely connected network with LSTM slots (one band).
/// Input [n, c, f, t] with f divisible by 2^(depth-1); output keeps (f, t).
class MultiScaleNet {
 public:
  MultiScaleNet(ParamStore& store, const NetSpec& spec, const ArchSpec& arch, std::size_t c_in,
                std::size_t padded_freq, std::mt19937_64& rng, bool ablate_lstm);
  Var forward(const Var& x, const ForwardOptions& opts) const;
  std::size_t out_channels() const;
  std::size_t padded_freq() const { return padded_freq_; }
  const NetSpec& spec() const { return spec_; }
  const std::vector<Slot>& down_slots() const { return down_; }
  const std::vector<Slot>& up_slots() const { return up_; }
  void describe(Wiring& wiring) const;

 private:
  NetSpec spec_;
  std::size_t padded_freq_;
  Var stem_kernel_, stem_bias_;
  std::vector<Slot> down_;                          // d1 .. dD
  std::vector<std::pair<Var, Var>> upsamplers_;     // before u(D-1) .. u1
  std::vector<Slot> up_;                            // u(D-1) .. u1
};

struct ModelOptions {
  std::uint64_t seed = 0;
  /// Replace every LSTM block with a zero map (no parameters).
  bool ablate_lstm = false;
};

/// Band networks on band slices plus a full-band network, merged and fused
/// by a final dense block, then a 1x1 conv to the output channels and ReLU.
class Model {
 public:
  explicit Model(ArchSpec spec, ModelOptions options = {});
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  /// x is [n, channels, bins, t] for any t >= 1.
  Var forward(const Var& x, const ForwardOptions& opts = {}) const;

  /// Eval-mode inference on raw magnitudes [channels, bins, t]: scales by
  /// input_scale, runs the network without recording a graph, undoes the
  /// scaling.
  Tensor infer(const Tensor& magnitude) const;

  const ArchSpec& spec() const { return spec_; }
  const BandLayout& layout() const { return layout_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }
  std::size_t parameter_count() const { return store_.count(); }
  const std::vector<MultiScaleNet>& band_nets() const { return bands_; }
  const MultiScaleNet& full_net() const { return *full_; }
  bool ablated() const { return options_.ablate_lstm; }
  std::uint64_t seed() const { return options_.seed; }

  /// Magnitudes are multiplied by this before entering the network.
  double input_scale() const { return input_scale_; }
  void set_input_scale(double s) { input_scale_ = s; }

  Wiring wiring() const;

 private:
  ArchSpec spec_;
  ModelOptions options_;
  BandLayout layout_;
  ParamStore store_;
  std::vector<MultiScaleNet> bands_;
  std::vector<std::pair<Var, Var>> band_proj_;
  std::optional<MultiScaleNet> full_;
  std::optional<DenseBlock> final_;
  Var out_kernel_, out_bias_;
  double input_scale_ = 1.0;
};

/// Frequency extent after padding to a multiple of 2^(depth-1).
std::size_t padded_extent(std::size_t n, int depth);

/// Per-direction LSTM units for a table entry under `mode`.
std::size_t units_per_direction(int table_units, LstmUnitsMode mode);

}  // namespace mmdlstm
