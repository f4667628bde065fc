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

#include "mmdlstm/inspect.hpp"

#include <cctype>
#include <cmath>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

namespace {

std::vector<std::string> split_path(const std::string& name) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = name.find('/', start);
    out.push_back(name.substr(start, slash - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return out;
}

bool is_slot(const std::string& seg) {
  return seg.size() >= 2 && (seg[0] == 'd' || seg[0] == 'u') &&
         std::isdigit(static_cast<unsigned char>(seg[1])) != 0;
}

std::string group_of(const std::string& name) {
  const auto seg = split_path(name);
  const std::size_t keep = (seg.size() > 3 && is_slot(seg[1])) ? 3 : 2;
  std::string out = seg[0];
  for (std::size_t i = 1; i < keep && i < seg.size(); ++i) out += "/" + seg[i];
  return out;
}

std::size_t slot_out(const SlotSpec& s, CombinationMode mode, std::size_t c_in, int k) {
  const std::size_t dense = static_cast<std::size_t>(s.layers) * static_cast<std::size_t>(k);
  if (s.has_dense() && s.has_lstm()) return mode == CombinationMode::kSb ? dense : dense + 1;
  if (s.has_dense()) return dense;
  if (s.has_lstm()) return c_in + 1;
  return c_in;
}

std::size_t lstm_in(const SlotSpec& s, CombinationMode mode, std::size_t c_in, int k) {
  if (s.has_dense() && mode == CombinationMode::kSa) {
    return static_cast<std::size_t>(s.layers) * static_cast<std::size_t>(k);
  }
  return c_in;
}

void net_lstm_counts(const ArchSpec& spec, const NetSpec& net, std::size_t freq,
                     std::vector<LstmBlockCount>& out) {
  const int depth = net.depth();
  freq = padded_extent(freq, depth);
  auto visit = [&](const SlotSpec& s, std::size_t c_in, std::size_t f) {
    if (s.has_lstm()) {
      LstmBlockCount b;
      b.path = net.name + "/" + s.position + "/lstm";
      b.c_in = lstm_in(s, spec.mode, c_in, net.growth);
      b.freq = f;
      b.units = units_per_direction(s.lstm_units, spec.lstm_units);
      b.count = LstmBlock::parameter_count(b.c_in, b.freq, b.units);
      out.push_back(b);
    }
    return slot_out(s, spec.mode, c_in, net.growth);
  };
  const auto k = static_cast<std::size_t>(net.growth);
  std::size_t c = k;
  std::vector<std::size_t> skips;
  for (int s = 1; s <= depth; ++s) {
    c = visit(net.down(s), c, freq >> (s - 1));
    skips.push_back(c);
  }
  for (int s = depth - 1; s >= 1; --s) {
    c = visit(net.up(s), k + skips[static_cast<std::size_t>(s - 1)], freq >> (s - 1));
  }
}

}  // namespace

std::vector<ParamItem> itemize_params(const Model& model) {
  std::vector<ParamItem> items;
  for (const auto& e : model.store().entries()) {
    if (!e.trainable) continue;
    const std::string g = group_of(e.name);
    if (items.empty() || items.back().path != g) items.push_back({g, 0});
    items.back().count += e.var.value().size();
  }
  return items;
}

std::vector<LstmBlockCount> lstm_block_counts(const ArchSpec& spec) {
  std::vector<LstmBlockCount> out;
  const BandLayout layout = spec.layout();
  net_lstm_counts(spec, spec.full_band, spec.bins(), out);
  for (std::size_t b = 0; b < spec.bands.size(); ++b) {
    net_lstm_counts(spec, spec.bands[b], layout.ranges()[b].size(), out);
  }
  return out;
}

std::size_t lstm_total(const ArchSpec& spec) {
  std::size_t total = 0;
  for (const auto& b : lstm_block_counts(spec)) total += b.count;
  return total;
}

NetField receptive_field(const NetSpec& net) {
  // r grows by (kernel - 1) * jump per layer; pooling doubles the jump and
  // the stride-2 transposed conv halves it without widening the field.
  NetField nf{net.name, 1, false};
  std::size_t jump = 1;
  nf.frames += 2;  // stem
  auto slot = [&](const SlotSpec& s) {
    nf.frames += 2 * jump * static_cast<std::size_t>(s.layers);
    nf.global = nf.global || s.has_lstm();
  };
  const int depth = net.depth();
  for (int s = 1; s <= depth; ++s) {
    slot(net.down(s));
    if (s < depth) {
      nf.frames += jump;
      jump *= 2;
    }
  }
  for (int s = depth - 1; s >= 1; --s) {
    jump /= 2;
    slot(net.up(s));
  }
  return nf;
}

ReceptiveField receptive_field(const ArchSpec& spec) {
  ReceptiveField rf;
  std::size_t widest = 0;
  for (const auto& b : spec.bands) rf.nets.push_back(receptive_field(b));
  rf.nets.push_back(receptive_field(spec.full_band));
  for (const auto& n : rf.nets) {
    widest = std::max(widest, n.frames);
    rf.global = rf.global || n.global;
  }
  rf.overall = widest + 2 * static_cast<std::size_t>(spec.final_layers);
  return rf;
}

std::vector<ChannelNorm> feature_map_norms(const Model& model, const Tensor& input,
                                           const std::string& slot) {
  bool known = false;
  for (const auto& c : model.wiring().channels) known = known || c.path == slot;
  if (!known || slot.find('/') == std::string::npos) {
    throw InputError("feature_map_norms: unknown slot " + slot);
  }
  const auto& s = input.shape();
  if (s.size() != 3) throw InputError("feature_map_norms: expected input [c, f, t]");
  SlotCapture capture;
  capture.slot = slot;
  ForwardOptions opts;
  opts.capture = &capture;
  {
    NoGradGuard guard;
    model.forward(constant(input.reshaped({1, s[0], s[1], s[2]})), opts);
  }
  if (!capture.found) throw InputError("feature_map_norms: slot " + slot + " produced no output");
  const Tensor& v = capture.value;
  const std::size_t n = v.dim(0), c = v.dim(1), plane = v.dim(2) * v.dim(3);
  std::vector<ChannelNorm> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double* p = v.data().data() + (b * c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i] * p[i];
    }
    out[ch].rms = std::sqrt(acc / static_cast<double>(n * plane));
    out[ch].lstm = capture.lstm_channel && *capture.lstm_channel == ch;
  }
  return out;
}

}  // namespace mmdlstm
