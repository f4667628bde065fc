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

#include <vector>

#include "mmdlstm/tensor.hpp"

namespace mmdlstm {

struct BinRange {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::size_t size() const { return end - begin; }
  bool operator==(const BinRange&) const = default;
};

/// Contiguous partition of the STFT bins [0, total_bins) into bands,
/// ordered low to high. A boundary bin belongs to the upper band.
class BandLayout {
 public:
  BandLayout() = default;
  /// Explicit ranges; must tile [0, total) exactly.
  explicit BandLayout(std::vector<BinRange> ranges);

  /// Boundary bin = round(freq * fft_size / sample_rate).
  static BandLayout from_boundaries(const std::vector<double>& boundaries_hz, std::size_t fft_size,
                                    double sample_rate);
  static BandLayout single(std::size_t total_bins);

  const std::vector<BinRange>& ranges() const { return ranges_; }
  std::size_t band_count() const { return ranges_.size(); }
  std::size_t total_bins() const { return ranges_.empty() ? 0 : ranges_.back().end; }

 private:
  std::vector<BinRange> ranges_;
};

std::size_t boundary_bin(double freq_hz, std::size_t fft_size, double sample_rate);

/// Splits along the frequency axis (rank - 2), so both [c, f, t] and
/// [n, c, f, t] work. Lossless.
std::vector<Tensor> band_split(const Tensor& mag, const BandLayout& layout);
Tensor band_merge(const std::vector<Tensor>& bands, const BandLayout& layout);

}  // namespace mmdlstm
