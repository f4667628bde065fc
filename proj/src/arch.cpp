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

#include "mmdlstm/arch.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

std::string to_string(CombinationMode mode) {
  switch (mode) {
    case CombinationMode::kSa: return "Sa";
    case CombinationMode::kSb: return "Sb";
    case CombinationMode::kP: return "P";
  }
  return "?";
}

std::string to_string(LstmUnitsMode mode) {
  return mode == LstmUnitsMode::kPerDirection ? "per_direction" : "split";
}

int NetSpec::depth() const {
  int d = 0;
  for (const auto& s : slots) {
    if (!s.up) d = std::max(d, s.scale);
  }
  return d;
}

const SlotSpec* NetSpec::find(std::string_view position) const {
  for (const auto& s : slots) {
    if (s.position == position) return &s;
  }
  return nullptr;
}

const SlotSpec& NetSpec::down(int scale) const {
  const SlotSpec* s = find("d" + std::to_string(scale));
  if (!s) throw ConfigError(name + ": missing slot d" + std::to_string(scale));
  return *s;
}

const SlotSpec& NetSpec::up(int scale) const {
  const SlotSpec* s = find("u" + std::to_string(scale));
  if (!s) throw ConfigError(name + ": missing slot u" + std::to_string(scale));
  return *s;
}

BandLayout ArchSpec::layout() const {
  return BandLayout::from_boundaries(boundaries_hz, fft_size, sample_rate);
}

int ArchSpec::max_depth() const {
  int d = full_band.depth();
  for (const auto& b : bands) d = std::max(d, b.depth());
  return d;
}

namespace {

void validate_net(const NetSpec& net, LstmUnitsMode units_mode) {
  if (net.growth < 1) throw ConfigError(net.name + ": growth rate must be at least 1");
  const int depth = net.depth();
  if (depth < 1) throw ConfigError(net.name + ": no downsampling-path slots");
  for (const auto& s : net.slots) {
    if (s.scale < 1) throw ConfigError(net.name + ": invalid slot " + s.position);
    if (!s.has_dense() && !s.has_lstm()) {
      throw ConfigError(net.name + ": slot " + s.position + " has neither dense nor LSTM block");
    }
    if (s.layers < 0 || s.lstm_units < 0) throw ConfigError(net.name + ": negative slot entry");
    if (s.up && s.scale >= depth) {
      throw ConfigError(net.name + ": slot " + s.position + " is at or below the bottleneck d" +
                        std::to_string(depth));
    }
    if (units_mode == LstmUnitsMode::kSplit && s.lstm_units % 2 != 0) {
      throw ConfigError(net.name + ": split LSTM units must be even at " + s.position);
    }
  }
  for (int s = 1; s <= depth; ++s) net.down(s);
  for (int s = depth - 1; s >= 1; --s) net.up(s);
  std::size_t expect = std::size_t(depth) + std::size_t(depth - 1);
  if (net.slots.size() != expect) throw ConfigError(net.name + ": duplicate slots");
}

SlotSpec parse_position(const std::string& token) {
  if (token.size() < 2 || (token[0] != 'd' && token[0] != 'u')) {
    throw ConfigError("architecture: bad slot name '" + token + "'");
  }
  SlotSpec s;
  s.position = token;
  s.up = token[0] == 'u';
  try {
    s.scale = std::stoi(token.substr(1));
  } catch (const std::exception&) {
    throw ConfigError("architecture: bad slot name '" + token + "'");
  }
  return s;
}

// d slots ascending, then u slots descending.
bool slot_order(const SlotSpec& a, const SlotSpec& b) {
  if (a.up != b.up) return !a.up;
  return a.up ? a.scale > b.scale : a.scale < b.scale;
}

int parse_int(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("architecture: expected an integer for " + what + ", got '" + tok + "'");
  }
}

double parse_double(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("architecture: expected a number for " + what + ", got '" + tok + "'");
  }
}

}  // namespace

void ArchSpec::validate() const {
  if (channels < 1) throw ConfigError("architecture: channels must be positive");
  if (final_layers < 1 || final_growth < 1) throw ConfigError("architecture: bad final block");
  if (fft_size < 4 || fft_size % 2 != 0) throw ConfigError("architecture: fft size must be even");
  if (bands.size() != boundaries_hz.size() + 1) {
    throw ConfigError("architecture: " + std::to_string(boundaries_hz.size()) +
                      " boundaries need " + std::to_string(boundaries_hz.size() + 1) +
                      " bands, got " + std::to_string(bands.size()));
  }
  layout();
  for (const auto& b : bands) validate_net(b, lstm_units);
  validate_net(full_band, lstm_units);
}

ArchSpec parse_arch(std::string_view text) {
  ArchSpec spec;
  spec.boundaries_hz.clear();
  std::vector<SlotSpec> columns;
  std::vector<NetSpec> nets;
  std::vector<std::string> net_keys;
  bool have_full = false;

  std::istringstream lines{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "architecture line " + std::to_string(lineno);
    const std::string& key = tok[0];
    auto need = [&](std::size_t n) {
      if (tok.size() != n) throw ConfigError(where + ": '" + key + "' expects " +
                                             std::to_string(n - 1) + " value(s)");
    };
    if (key == "mode") {
      need(2);
      if (tok[1] == "Sa") spec.mode = CombinationMode::kSa;
      else if (tok[1] == "Sb") spec.mode = CombinationMode::kSb;
      else if (tok[1] == "P") spec.mode = CombinationMode::kP;
      else throw ConfigError(where + ": unknown mode '" + tok[1] + "'");
    } else if (key == "lstm_units") {
      need(2);
      if (tok[1] == "per_direction") spec.lstm_units = LstmUnitsMode::kPerDirection;
      else if (tok[1] == "split") spec.lstm_units = LstmUnitsMode::kSplit;
      else throw ConfigError(where + ": unknown lstm_units '" + tok[1] + "'");
    } else if (key == "sample_rate") {
      need(2);
      spec.sample_rate = parse_double(tok[1], key);
    } else if (key == "fft_size") {
      need(2);
      spec.fft_size = std::size_t(parse_int(tok[1], key));
    } else if (key == "boundaries") {
      for (std::size_t i = 1; i < tok.size(); ++i) spec.boundaries_hz.push_back(parse_double(tok[i], key));
    } else if (key == "channels") {
      need(2);
      spec.channels = parse_int(tok[1], key);
    } else if (key == "final_block") {
      need(3);
      spec.final_layers = parse_int(tok[1], key);
      spec.final_growth = parse_int(tok[2], key);
    } else if (key == "slots") {
      columns.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) columns.push_back(parse_position(tok[i]));
    } else if (key == "band") {
      if (tok.size() != 4 || tok[2] != "k") throw ConfigError(where + ": expected 'band <name> k <growth>'");
      if (columns.empty()) throw ConfigError(where + ": 'slots' header must precede bands");
      NetSpec net;
      net.name = tok[1] == "full" ? "full" : "band" + tok[1];
      if (std::find(net_keys.begin(), net_keys.end(), net.name) != net_keys.end()) {
        throw ConfigError(where + ": duplicate band '" + tok[1] + "'");
      }
      net.growth = parse_int(tok[3], "k");
      net.slots = columns;
      have_full = have_full || net.name == "full";
      net_keys.push_back(net.name);
      nets.push_back(std::move(net));
    } else if (key == "l" || key == "m") {
      if (nets.empty()) throw ConfigError(where + ": row outside a band");
      if (tok.size() != columns.size() + 1) {
        throw ConfigError(where + ": row has " + std::to_string(tok.size() - 1) + " entries for " +
                          std::to_string(columns.size()) + " slots");
      }
      for (std::size_t i = 0; i < columns.size(); ++i) {
        const int v = tok[i + 1] == "-" ? 0 : parse_int(tok[i + 1], key + " row");
        if (v < 0) throw ConfigError(where + ": negative entry");
        (key == "l" ? nets.back().slots[i].layers : nets.back().slots[i].lstm_units) = v;
      }
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  if (!have_full) throw ConfigError("architecture: missing 'band full'");
  for (auto& net : nets) {
    std::erase_if(net.slots, [](const SlotSpec& s) { return !s.has_dense() && !s.has_lstm(); });
    std::stable_sort(net.slots.begin(), net.slots.end(), slot_order);
    if (net.name == "full") spec.full_band = std::move(net);
    else spec.bands.push_back(std::move(net));
  }
  spec.validate();
  return spec;
}

ArchSpec load_arch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open architecture file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_arch(ss.str());
}

std::string format_arch(const ArchSpec& spec) {
  std::ostringstream os;
  os << "mode " << to_string(spec.mode) << '\n';
  os << "lstm_units " << to_string(spec.lstm_units) << '\n';
  os << "sample_rate " << std::setprecision(17) << spec.sample_rate << '\n';
  os << "fft_size " << spec.fft_size << '\n';
  os << "boundaries";
  for (double b : spec.boundaries_hz) os << ' ' << std::setprecision(17) << b;
  os << '\n';
  os << "channels " << spec.channels << '\n';
  os << "final_block " << spec.final_layers << ' ' << spec.final_growth << '\n';
  const int depth = spec.max_depth();
  std::vector<std::string> columns;
  for (int s = 1; s <= depth; ++s) columns.push_back("d" + std::to_string(s));
  for (int s = depth - 1; s >= 1; --s) columns.push_back("u" + std::to_string(s));
  os << "slots";
  for (const auto& c : columns) os << ' ' << c;
  os << '\n';
  auto emit = [&](const NetSpec& net, const std::string& label) {
    os << "band " << label << " k " << net.growth << '\n';
    for (const char* row : {"l", "m"}) {
      os << "  " << row;
      for (const auto& c : columns) {
        const SlotSpec* s = net.find(c);
        const int v = !s ? 0 : (row[0] == 'l' ? s->layers : s->lstm_units);
        os << ' ' << (v ? std::to_string(v) : "-");
      }
      os << '\n';
    }
  };
  for (const auto& b : spec.bands) emit(b, b.name.substr(4));
  emit(spec.full_band, "full");
  return os.str();
}

std::uint64_t arch_hash(const ArchSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : format_arch(spec)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string arch_hash_hex(const ArchSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(arch_hash(spec)));
  return buf;
}

namespace {

NetSpec reduce_net(NetSpec net, int growth_divisor, int drop_scales) {
  net.growth = std::max(1, net.growth / growth_divisor);
  for (int i = 0; i < drop_scales; ++i) {
    const int depth = net.depth();
    if (depth <= 1) throw ConfigError(net.name + ": cannot drop more scales");
    const SlotSpec bottom = net.down(depth);
    std::erase_if(net.slots, [&](const SlotSpec& s) {
      return (!s.up && s.scale == depth) || (s.up && s.scale == depth - 1);
    });
    if (bottom.has_lstm()) {
      for (auto& s : net.slots) {
        if (!s.up && s.scale == depth - 1 && !s.has_lstm()) s.lstm_units = bottom.lstm_units;
      }
    }
  }
  return net;
}

}  // namespace

ArchSpec reduced_arch(const ArchSpec& spec, int growth_divisor, int drop_scales) {
  if (growth_divisor < 1 || drop_scales < 0) throw ConfigError("reduced_arch: bad arguments");
  ArchSpec out = spec;
  for (auto& b : out.bands) b = reduce_net(b, growth_divisor, drop_scales);
  out.full_band = reduce_net(out.full_band, growth_divisor, drop_scales);
  out.final_growth = std::max(1, spec.final_growth / growth_divisor);
  out.validate();
  return out;
}

bool operator==(const SlotSpec& a, const SlotSpec& b) {
  return a.position == b.position && a.up == b.up && a.scale == b.scale && a.layers == b.layers &&
         a.lstm_units == b.lstm_units;
}

bool operator==(const NetSpec& a, const NetSpec& b) {
  return a.name == b.name && a.growth == b.growth && a.slots == b.slots;
}

bool operator==(const ArchSpec& a, const ArchSpec& b) {
  return a.mode == b.mode && a.lstm_units == b.lstm_units && a.sample_rate == b.sample_rate &&
         a.fft_size == b.fft_size && a.boundaries_hz == b.boundaries_hz &&
         a.channels == b.channels && a.final_layers == b.final_layers &&
         a.final_growth == b.final_growth && a.bands == b.bands && a.full_band == b.full_band;
}

namespace {

constexpr std::string_view kTable1 = R"(# MMDenseLSTM default architecture.
#
# Each band row pair gives, per slot, the dense-layer count l and the LSTM
# unit count m ("-" = absent). dN is scale N on the downsampling path, uN on
# the upsampling path; the deepest d slot of a network is its bottleneck.
# All dense blocks use 3x3 kernels with the band's growth rate k.
mode          Sa
lstm_units    per_direction
sample_rate   44100
fft_size      4096
boundaries    4100 11000
channels      2
final_block   3 12

slots       d1  d2  d3  d4  d5  u4  u3  u2  u1
band 1 k 14
  l          5   5   5   5   -   -   5   5   5
  m          -   -   -  128  -   -   -  128  -
band 2 k 4
  l          4   4   4   4   -   -   4   4   4
  m          -   -   -  32   -   -   -   -   -
band 3 k 2
  l          1   1   -   -   -   -   -   1   1
  m          -   -   8   -   -   -   -   -   -
band full k 7
  l          3   3   4   5   5   5   4   3   3
  m          -   -   -  128  -   -   -  128  -
)";

}  // namespace

std::string_view table1_config_text() { return kTable1; }

ArchSpec table1_arch() { return parse_arch(kTable1); }

}  // namespace mmdlstm
