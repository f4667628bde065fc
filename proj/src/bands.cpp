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

#include "mmdlstm/bands.hpp"

#include <cmath>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

BandLayout::BandLayout(std::vector<BinRange> ranges) : ranges_(std::move(ranges)) {
  if (ranges_.empty()) throw ConfigError("band layout: no bands");
  std::size_t expect = 0;
  for (const auto& r : ranges_) {
    if (r.begin != expect || r.end <= r.begin) {
      throw ConfigError("band layout: ranges must be contiguous, non-empty and start at bin 0");
    }
    expect = r.end;
  }
}

std::size_t boundary_bin(double freq_hz, std::size_t fft_size, double sample_rate) {
  if (!(sample_rate > 0.0) || freq_hz < 0.0) throw ConfigError("band layout: invalid frequency");
  return std::size_t(std::lround(freq_hz * double(fft_size) / sample_rate));
}

BandLayout BandLayout::from_boundaries(const std::vector<double>& boundaries_hz,
                                       std::size_t fft_size, double sample_rate) {
  const std::size_t total = fft_size / 2 + 1;
  std::vector<BinRange> ranges;
  std::size_t begin = 0;
  for (double hz : boundaries_hz) {
    const std::size_t b = boundary_bin(hz, fft_size, sample_rate);
    if (b <= begin || b >= total) {
      throw ConfigError("band layout: boundary " + std::to_string(hz) + " Hz maps to bin " +
                        std::to_string(b) + ", outside (" + std::to_string(begin) + ", " +
                        std::to_string(total) + ")");
    }
    ranges.push_back({begin, b});
    begin = b;
  }
  ranges.push_back({begin, total});
  return BandLayout(std::move(ranges));
}

BandLayout BandLayout::single(std::size_t total_bins) {
  return BandLayout({BinRange{0, total_bins}});
}

std::vector<Tensor> band_split(const Tensor& mag, const BandLayout& layout) {
  if (mag.rank() < 2) throw ConfigError("band_split: tensor rank too small");
  const std::size_t axis = mag.rank() - 2;
  const std::size_t F = mag.dim(axis);
  if (F != layout.total_bins()) {
    throw ConfigError("band_split: tensor has " + std::to_string(F) + " bins, layout expects " +
                      std::to_string(layout.total_bins()));
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= mag.dim(i);
  const std::size_t T = mag.dim(axis + 1);
  std::vector<Tensor> out;
  for (const auto& r : layout.ranges()) {
    Shape s = mag.shape();
    s[axis] = r.size();
    Tensor band(s);
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(mag.data().data() + (o * F + r.begin) * T, r.size() * T,
                  band.data().data() + o * r.size() * T);
    out.push_back(std::move(band));
  }
  return out;
}

Tensor band_merge(const std::vector<Tensor>& bands, const BandLayout& layout) {
  if (bands.size() != layout.band_count() || bands.empty()) {
    throw ConfigError("band_merge: band count does not match layout");
  }
  const std::size_t axis = bands.front().rank() - 2;
  Shape s = bands.front().shape();
  s[axis] = layout.total_bins();
  const std::size_t F = s[axis], T = s[axis + 1];
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  Tensor merged(s);
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& r = layout.ranges()[k];
    Shape expect = s;
    expect[axis] = r.size();
    if (bands[k].shape() != expect) {
      throw ConfigError("band_merge: band " + std::to_string(k) + " has shape " +
                        shape_string(bands[k].shape()) + ", expected " + shape_string(expect));
    }
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(bands[k].data().data() + o * r.size() * T, r.size() * T,
                  merged.data().data() + (o * F + r.begin) * T);
  }
  return merged;
}

}  // namespace mmdlstm
