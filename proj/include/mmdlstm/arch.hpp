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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmdlstm/bands.hpp"

namespace mmdlstm {

/// How a slot with both a dense block and an LSTM block wires them.
///   Sa: dense, then LSTM on the dense output.
///   Sb: LSTM on the slot input, then dense.
///   P:  both on the slot input, outputs concatenated.
enum class CombinationMode { kSa, kSb, kP };

/// How the table's LSTM unit count m is spent. kPerDirection gives each
/// direction m units (linear layer 2m -> f); kSplit gives each direction
/// m/2 units (linear layer m -> f).
enum class LstmUnitsMode { kPerDirection, kSplit };

std::string to_string(CombinationMode mode);
std::string to_string(LstmUnitsMode mode);

/// One column of the architecture table, e.g. "d4" or "u2".
struct SlotSpec {
  std::string position;
  bool up = false;
  int scale = 1;
  int layers = 0;      // dense layers l; 0 = no dense block
  int lstm_units = 0;  // m; 0 = no LSTM block

  bool has_dense() const { return layers > 0; }
  bool has_lstm() const { return lstm_units > 0; }
};

/// One multi-scale sub-network: slots d1..dD then u(D-1)..u1, where dD is
/// the bottleneck.
struct NetSpec {
  std::string name;  // "band1", "band2", ..., "full"
  int growth = 1;
  std::vector<SlotSpec> slots;

  int depth() const;
  const SlotSpec* find(std::string_view position) const;
  const SlotSpec& down(int scale) const;
  const SlotSpec& up(int scale) const;
};

struct ArchSpec {
  CombinationMode mode = CombinationMode::kSa;
  LstmUnitsMode lstm_units = LstmUnitsMode::kPerDirection;
  double sample_rate = 44100.0;
  std::size_t fft_size = 4096;
  std::vector<double> boundaries_hz;
  int channels = 2;
  int final_layers = 3;
  int final_growth = 12;
  std::vector<NetSpec> bands;
  NetSpec full_band;

  std::size_t bins() const { return fft_size / 2 + 1; }
  BandLayout layout() const;
  /// Time frames must be a multiple of 2^(max_depth - 1).
  int max_depth() const;
  std::size_t time_multiple() const { return std::size_t(1) << (max_depth() - 1); }
  /// Throws ConfigError describing the first inconsistency.
  void validate() const;
};

/// The default configuration: three bands split at 4.1 kHz and 11 kHz plus
/// a full-band network, 4096-point STFT at 44.1 kHz.
ArchSpec table1_arch();
/// Text of the default configuration file (configs/table1.cfg).
std::string_view table1_config_text();

ArchSpec parse_arch(std::string_view text);
ArchSpec load_arch(const std::filesystem::path& path);
/// Canonical text form; parse_arch(format_arch(a)) == a.
std::string format_arch(const ArchSpec& spec);
/// FNV-1a 64 over format_arch.
std::uint64_t arch_hash(const ArchSpec& spec);
std::string arch_hash_hex(const ArchSpec& spec);

/// Smaller variant: every growth rate divided by `growth_divisor` (at least
/// 1) and the lowest `drop_scales` scales removed from every sub-network.
/// LSTM units of a removed bottleneck move to the new bottleneck.
ArchSpec reduced_arch(const ArchSpec& spec, int growth_divisor, int drop_scales);

bool operator==(const SlotSpec& a, const SlotSpec& b);
bool operator==(const NetSpec& a, const NetSpec& b);
bool operator==(const ArchSpec& a, const ArchSpec& b);

}  // namespace mmdlstm
