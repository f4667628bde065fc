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
#include <cmath>

#include "mmdlstm/error.hpp"
#include "mmdlstm/model.hpp"

namespace mmdlstm {

bool Wiring::has_edge(const std::string& from, const std::string& to) const {
  return std::find(edges.begin(), edges.end(), WiringEdge{from, to}) != edges.end();
}

const ChannelInfo& Wiring::at(const std::string& path) const {
  for (const auto& c : channels) {
    if (c.path == path) return c;
  }
  throw InputError("wiring: no component named " + path);
}

std::size_t units_per_direction(int table_units, LstmUnitsMode mode) {
  if (table_units <= 0) return 0;
  auto m = static_cast<std::size_t>(table_units);
  return mode == LstmUnitsMode::kSplit ? std::max<std::size_t>(1, m / 2) : m;
}

// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(ParamStore& store, const std::string& prefix, std::size_t c_in,
                       std::size_t growth, std::mt19937_64& rng)
    : c_in_(c_in) {
  gamma_ = store.add_param(prefix + "/bn/gamma", Tensor({c_in}, 1.0));
  beta_ = store.add_param(prefix + "/bn/beta", Tensor({c_in}, 0.0));
  running_mean_ = store.add_buffer(prefix + "/bn/running_mean", Tensor({c_in}, 0.0));
  running_var_ = store.add_buffer(prefix + "/bn/running_var", Tensor({c_in}, 1.0));
  kernel_ = store.add_param(prefix + "/conv/kernel", init::conv_kernel(rng, growth, c_in, 3, 3));
  bias_ = store.add_param(prefix + "/conv/bias", Tensor({growth}, 0.0));
}

Var DenseLayer::forward(const Var& x, ops::BnMode mode) const {
  // Handles share nodes, so the copies write through to the stored buffers.
  Var mean = running_mean_;
  Var var = running_var_;
  ops::RunningStats stats{&mean.mutable_value(), &var.mutable_value()};
  Var h = ops::batch_norm(x, gamma_, beta_, &stats, kBatchNormEps, mode);
  return ops::conv2d(ops::relu(h), kernel_, bias_, ops::Padding::kSame);
}

DenseBlock::DenseBlock(ParamStore& store, const std::string& prefix, std::size_t c_in,
                       int layers, int growth, std::mt19937_64& rng)
    : c_in_(c_in), growth_(static_cast<std::size_t>(growth)) {
  std::size_t c = c_in;
  for (int j = 0; j < layers; ++j) {
    layers_.emplace_back(store, prefix + "/layer" + std::to_string(j), c, growth_, rng);
    c += growth_;
  }
}

std::size_t DenseBlock::out_channels() const {
  return layers_.empty() ? c_in_ : layers_.size() * growth_;
}

Var DenseBlock::forward(const Var& x, ops::BnMode mode) const {
  if (layers_.empty()) return x;
  std::vector<Var> outs;
  for (const auto& layer : layers_) {
    std::vector<Var> parts{x};
    parts.insert(parts.end(), outs.begin(), outs.end());
    outs.push_back(layer.forward(parts.size() == 1 ? x : ops::concat(parts, 1), mode));
  }
  return outs.size() == 1 ? outs.front() : ops::concat(outs, 1);
}

// ---------------------------------------------------------------------------

namespace {

ops::LstmDirection make_direction(ParamStore& store, const std::string& prefix, std::size_t d,
                                  std::size_t m, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(m));
  ops::LstmDirection dir;
  dir.w_input = store.add_param(prefix + "/w_input", init::uniform(rng, {4 * m, d}, bound));
  dir.w_recurrent =
      store.add_param(prefix + "/w_recurrent", init::uniform(rng, {4 * m, m}, bound));
  dir.bias = store.add_param(prefix + "/bias", init::lstm_bias(m));
  return dir;
}

}  // namespace

LstmBlock::LstmBlock(ParamStore& store, const std::string& prefix, std::size_t c_in,
                     std::size_t freq, std::size_t units, std::mt19937_64& rng, bool ablated)
    : c_in_(c_in), freq_(freq), units_(units), ablated_(ablated) {
  if (ablated_) return;
  conv_kernel_ = store.add_param(prefix + "/conv/kernel", init::conv_kernel(rng, 1, c_in, 1, 1));
  conv_bias_ = store.add_param(prefix + "/conv/bias", Tensor({1}, 0.0));
  fwd_ = make_direction(store, prefix + "/fwd", freq, units, rng);
  bwd_ = make_direction(store, prefix + "/bwd", freq, units, rng);
  out_weight_ = store.add_param(prefix + "/out/weight", init::dense_matrix(rng, freq, 2 * units));
  out_bias_ = store.add_param(prefix + "/out/bias", Tensor({freq}, 0.0));
}

std::size_t LstmBlock::parameter_count(std::size_t c_in, std::size_t f, std::size_t m) {
  return (c_in + 1) + 8 * (m * f + m * m + m) + (2 * m * f + f);
}

Var LstmBlock::forward(const Var& x) const {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != c_in_ || s[2] != freq_) {
    throw InputError("lstm block: expected [n, " + std::to_string(c_in_) + ", " +
                     std::to_string(freq_) + ", t], got " + shape_string(s));
  }
  if (ablated_) return constant(Tensor({s[0], 1, s[2], s[3]}));
  Var y = ops::conv2d(x, conv_kernel_, conv_bias_, ops::Padding::kSame);
  Var h = ops::bilstm(ops::map_to_sequence(y), fwd_, bwd_);
  return ops::sequence_to_map(ops::linear(h, out_weight_, out_bias_));
}

// ---------------------------------------------------------------------------

Slot::Slot(ParamStore& store, const std::string& path, const SlotSpec& spec,
           CombinationMode mode, LstmUnitsMode units_mode, std::size_t c_in, std::size_t freq,
           int growth, std::mt19937_64& rng, bool ablate_lstm)
    : path_(path), spec_(spec), mode_(mode), c_in_(c_in) {
  const std::size_t m = units_per_direction(spec.lstm_units, units_mode);
  const bool both = spec.has_dense() && spec.has_lstm();
  if (spec.has_dense() && !spec.has_lstm()) {
    dense_.emplace(store, path + "/dense", c_in, spec.layers, growth, rng);
    c_out_ = dense_->out_channels();
  } else if (!spec.has_dense() && spec.has_lstm()) {
    lstm_.emplace(store, path + "/lstm", c_in, freq, m, rng, ablate_lstm);
    c_out_ = c_in + 1;
  } else if (both && mode == CombinationMode::kSa) {
    dense_.emplace(store, path + "/dense", c_in, spec.layers, growth, rng);
    lstm_.emplace(store, path + "/lstm", dense_->out_channels(), freq, m, rng, ablate_lstm);
    c_out_ = dense_->out_channels() + 1;
  } else if (both && mode == CombinationMode::kSb) {
    lstm_.emplace(store, path + "/lstm", c_in, freq, m, rng, ablate_lstm);
    dense_.emplace(store, path + "/dense", c_in + 1, spec.layers, growth, rng);
    c_out_ = dense_->out_channels();
  } else if (both) {
    dense_.emplace(store, path + "/dense", c_in, spec.layers, growth, rng);
    lstm_.emplace(store, path + "/lstm", c_in, freq, m, rng, ablate_lstm);
    c_out_ = dense_->out_channels() + 1;
  } else {
    c_out_ = c_in;
  }
}

std::optional<std::size_t> Slot::lstm_channel() const {
  if (!lstm_) return std::nullopt;
  if (!dense_) return c_in_;
  if (mode_ == CombinationMode::kSb) return std::nullopt;
  return dense_->out_channels();
}

Var Slot::forward(const Var& x, const ForwardOptions& opts) const {
  Var out;
  if (dense_ && !lstm_) {
    out = dense_->forward(x, opts.mode);
  } else if (lstm_ && !dense_) {
    out = ops::concat_channels(x, lstm_->forward(x));
  } else if (!dense_) {
    out = x;
  } else if (mode_ == CombinationMode::kSa) {
    Var d = dense_->forward(x, opts.mode);
    out = ops::concat_channels(d, lstm_->forward(d));
  } else if (mode_ == CombinationMode::kSb) {
    out = dense_->forward(ops::concat_channels(x, lstm_->forward(x)), opts.mode);
  } else {
    out = ops::concat_channels(dense_->forward(x, opts.mode), lstm_->forward(x));
  }
  if (opts.capture != nullptr && opts.capture->slot == path_) {
    opts.capture->found = true;
    opts.capture->value = out.value();
    opts.capture->lstm_channel = lstm_channel();
  }
  return out;
}

void Slot::describe(Wiring& w) const {
  const std::string in = path_ + ":in";
  const std::string out = path_ + ":out";
  const std::string dense = path_ + "/dense";
  const std::string lstm = path_ + "/lstm";
  auto edge = [&](const std::string& a, const std::string& b) { w.edges.push_back({a, b}); };
  if (dense_ && !lstm_) {
    edge(in, dense);
    edge(dense, out);
  } else if (lstm_ && !dense_) {
    edge(in, lstm);
    edge(in, out);
    edge(lstm, out);
  } else if (!dense_) {
    edge(in, out);
  } else if (mode_ == CombinationMode::kSa) {
    edge(in, dense);
    edge(dense, lstm);
    edge(dense, out);
    edge(lstm, out);
  } else if (mode_ == CombinationMode::kSb) {
    edge(in, lstm);
    edge(in, dense);
    edge(lstm, dense);
    edge(dense, out);
  } else {
    edge(in, dense);
    edge(in, lstm);
    edge(dense, out);
    edge(lstm, out);
  }
  w.channels.push_back({path_, c_in_, c_out_});
  if (dense_) w.channels.push_back({dense, dense_->in_channels(), dense_->out_channels()});
  if (lstm_) {
    const std::size_t lin = (mode_ == CombinationMode::kSa && dense_) ? dense_->out_channels()
                                                                       : c_in_;
    w.channels.push_back({lstm, lin, 1});
  }
}

}  // namespace mmdlstm
