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

#include <utility>

#include "mmdlstm/error.hpp"
#include "mmdlstm/model.hpp"

namespace mmdlstm {

std::size_t padded_extent(std::size_t n, int depth) {
  const std::size_t m = std::size_t(1) << (depth - 1);
  return (n + m - 1) / m * m;
}

namespace {

std::string scale_name(const std::string& net, const char* what, int s) {
  return net + "/" + what + std::to_string(s);
}

}  // namespace

MultiScaleNet::MultiScaleNet(ParamStore& store, const NetSpec& spec, const ArchSpec& arch,
                             std::size_t c_in, std::size_t padded_freq, std::mt19937_64& rng,
                             bool ablate_lstm)
    : spec_(spec), padded_freq_(padded_freq) {
  const int depth = spec.depth();
  const auto k = static_cast<std::size_t>(spec.growth);
  const std::string& name = spec.name;
  stem_kernel_ = store.add_param(name + "/stem/kernel", init::conv_kernel(rng, k, c_in, 3, 3));
  stem_bias_ = store.add_param(name + "/stem/bias", Tensor({k}, 0.0));

  std::size_t c = k;
  std::size_t freq = padded_freq;
  std::vector<std::size_t> skip_channels;
  for (int s = 1; s <= depth; ++s) {
    down_.emplace_back(store, scale_name(name, "d", s), spec.down(s), arch.mode, arch.lstm_units,
                       c, freq, spec.growth, rng, ablate_lstm);
    c = down_.back().out_channels();
    skip_channels.push_back(c);
    if (s < depth) freq /= 2;
  }
  for (int s = depth - 1; s >= 1; --s) {
    const std::string up = scale_name(name, "up", s);
    Var kernel = store.add_param(up + "/kernel", init::transposed_kernel(rng, c, k));
    Var bias = store.add_param(up + "/bias", Tensor({k}, 0.0));
    upsamplers_.emplace_back(kernel, bias);
    freq *= 2;
    c = k + skip_channels[static_cast<std::size_t>(s - 1)];
    up_.emplace_back(store, scale_name(name, "u", s), spec.up(s), arch.mode, arch.lstm_units, c,
                     freq, spec.growth, rng, ablate_lstm);
    c = up_.back().out_channels();
  }
}

std::size_t MultiScaleNet::out_channels() const {
  return up_.empty() ? down_.back().out_channels() : up_.back().out_channels();
}

Var MultiScaleNet::forward(const Var& x, const ForwardOptions& opts) const {
  if (x.shape().size() != 4 || x.shape()[2] != padded_freq_) {
    throw InputError(spec_.name + ": expected frequency extent " + std::to_string(padded_freq_) +
                     ", got " + shape_string(x.shape()));
  }
  Var h = ops::conv2d(x, stem_kernel_, stem_bias_, ops::Padding::kSame);
  std::vector<Var> skips;
  for (std::size_t i = 0; i < down_.size(); ++i) {
    h = down_[i].forward(h, opts);
    if (i + 1 < down_.size()) {
      skips.push_back(h);
      h = ops::downsample2(h);
    }
  }
  for (std::size_t i = 0; i < up_.size(); ++i) {
    const auto& [kernel, bias] = upsamplers_[i];
    Var u = ops::upsample2(h, kernel, bias);
    h = up_[i].forward(ops::concat_channels(u, skips[skips.size() - 1 - i]), opts);
  }
  return h;
}

void MultiScaleNet::describe(Wiring& w) const {
  const std::string& name = spec_.name;
  const int depth = spec_.depth();
  auto slot_in = [&](const char* dir, int s) { return scale_name(name, dir, s) + ":in"; };
  auto slot_out = [&](const char* dir, int s) { return scale_name(name, dir, s) + ":out"; };
  w.edges.push_back({name + ":in", name + "/stem"});
  w.edges.push_back({name + "/stem", slot_in("d", 1)});
  for (int s = 1; s < depth; ++s) {
    const std::string pool = scale_name(name, "pool", s);
    w.edges.push_back({slot_out("d", s), pool});
    w.edges.push_back({pool, slot_in("d", s + 1)});
  }
  std::string below = slot_out("d", depth);
  for (int s = depth - 1; s >= 1; --s) {
    const std::string up = scale_name(name, "up", s);
    w.edges.push_back({below, up});
    w.edges.push_back({up, slot_in("u", s)});
    w.edges.push_back({slot_out("d", s), slot_in("u", s)});
    below = slot_out("u", s);
  }
  w.edges.push_back({below, name + ":out"});
  for (const auto& slot : down_) slot.describe(w);
  for (const auto& slot : up_) slot.describe(w);
  w.channels.push_back({name, down_.front().in_channels(), out_channels()});
}

// ---------------------------------------------------------------------------

Model::Model(ArchSpec spec, ModelOptions options)
    : spec_(std::move(spec)), options_(options) {
  spec_.validate();
  layout_ = spec_.layout();
  std::mt19937_64 rng(options_.seed);
  const auto channels = static_cast<std::size_t>(spec_.channels);

  full_.emplace(store_, spec_.full_band, spec_, channels,
                padded_extent(spec_.bins(), spec_.full_band.depth()), rng, options_.ablate_lstm);
  const std::size_t width = full_->out_channels();
  for (std::size_t b = 0; b < spec_.bands.size(); ++b) {
    const NetSpec& net = spec_.bands[b];
    bands_.emplace_back(store_, net, spec_, channels,
                        padded_extent(layout_.ranges()[b].size(), net.depth()), rng,
                        options_.ablate_lstm);
    const std::size_t c = bands_.back().out_channels();
    Var kernel = store_.add_param(net.name + "/proj/kernel", init::conv_kernel(rng, width, c, 1, 1));
    Var bias = store_.add_param(net.name + "/proj/bias", Tensor({width}, 0.0));
    band_proj_.emplace_back(kernel, bias);
  }
  final_.emplace(store_, "final/dense", 2 * width, spec_.final_layers, spec_.final_growth, rng);
  // The head starts as a constant: with random weights most outputs begin
  // below zero and the final relu never passes them a gradient again.
  out_kernel_ = store_.add_param("final/out/kernel",
                                 Tensor({channels, final_->out_channels(), 1, 1}, 0.0));
  out_bias_ = store_.add_param("final/out/bias", Tensor({channels}, kHeadBiasInit));
}

Var Model::forward(const Var& x, const ForwardOptions& opts) const {
  const auto& s = x.shape();
  const auto channels = static_cast<std::size_t>(spec_.channels);
  if (s.size() != 4 || s[1] != channels || s[2] != spec_.bins() || s[3] == 0) {
    throw InputError("model: expected [n, " + std::to_string(channels) + ", " +
                     std::to_string(spec_.bins()) + ", t], got " + shape_string(s));
  }
  const std::size_t frames = s[3];
  const std::size_t multiple = spec_.time_multiple();
  const std::size_t padded_t = (frames + multiple - 1) / multiple * multiple;
  Var xt = padded_t == frames ? x : ops::reflect_pad(x, 3, padded_t - frames);

  auto run = [&](const MultiScaleNet& net, const Var& in, std::size_t f) {
    Var padded = net.padded_freq() == f ? in : ops::reflect_pad(in, 2, net.padded_freq() - f);
    Var y = net.forward(padded, opts);
    return net.padded_freq() == f ? y : ops::slice(y, 2, 0, f);
  };

  std::vector<Var> band_outs;
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    const BinRange r = layout_.ranges()[b];
    Var y = run(bands_[b], ops::slice(xt, 2, r.begin, r.end), r.size());
    const auto& [kernel, bias] = band_proj_[b];
    band_outs.push_back(ops::conv2d(y, kernel, bias, ops::Padding::kSame));
  }
  Var full = run(*full_, xt, spec_.bins());
  Var merged = band_outs.size() == 1 ? band_outs.front() : ops::concat(band_outs, 2);
  Var h = final_->forward(ops::concat_channels(merged, full), opts.mode);
  Var y = ops::relu(ops::conv2d(h, out_kernel_, out_bias_, ops::Padding::kSame));
  return padded_t == frames ? y : ops::slice(y, 3, 0, frames);
}

Tensor Model::infer(const Tensor& magnitude) const {
  const auto& s = magnitude.shape();
  if (s.size() != 3) throw InputError("model: expected magnitude [c, f, t]");
  Tensor x = magnitude.reshaped({1, s[0], s[1], s[2]});
  for (double& v : x.data()) v *= input_scale_;
  NoGradGuard guard;
  Tensor y = forward(constant(std::move(x))).value();
  for (double& v : y.data()) v /= input_scale_;
  return y.reshaped(s);
}

Wiring Model::wiring() const {
  Wiring w;
  for (std::size_t b = 0; b < bands_.size(); ++b) {
    const std::string& name = bands_[b].spec().name;
    w.edges.push_back({"input", name + ":in"});
    bands_[b].describe(w);
    w.edges.push_back({name + ":out", name + "/proj"});
    w.edges.push_back({name + "/proj", "merge"});
    w.channels.push_back({name + "/proj", bands_[b].out_channels(), full_->out_channels()});
  }
  w.edges.push_back({"input", full_->spec().name + ":in"});
  full_->describe(w);
  w.edges.push_back({full_->spec().name + ":out", "final/dense"});
  w.edges.push_back({"merge", "final/dense"});
  w.edges.push_back({"final/dense", "final/out"});
  w.edges.push_back({"final/out", "output"});
  w.channels.push_back({"final/dense", final_->in_channels(), final_->out_channels()});
  w.channels.push_back({"final/out", final_->out_channels(),
                        static_cast<std::size_t>(spec_.channels)});
  return w;
}

}  // namespace mmdlstm
