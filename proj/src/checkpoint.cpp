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

#include "mmdlstm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

namespace {

constexpr const char* kMagic = "mmdlstm-checkpoint 1";

using nlohmann::json;

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CheckpointInfo& info) {
  json manifest;
  manifest["format"] = 1;
  manifest["endianness"] = "little";
  manifest["precision"] = "float64";
  manifest["arch"] = format_arch(model.spec());
  manifest["arch_hash"] = arch_hash_hex(model.spec());
  manifest["seed"] = model.seed();
  manifest["ablate_lstm"] = model.ablated();
  manifest["source"] = info.source;
  // Hex bits keep the value exact regardless of float printing.
  manifest["input_scale"] = std::bit_cast<std::uint64_t>(model.input_scale());

  std::string payload;
  json tensors = json::array();
  for (const auto& e : model.store().entries()) {
    const Tensor& v = e.var.value();
    tensors.push_back({{"name", e.name},
                       {"kind", e.trainable ? "param" : "buffer"},
                       {"shape", v.shape()},
                       {"offset", payload.size()},
                       {"bytes", v.size() * 8}});
    for (double x : v.data()) put_le(payload, x);
  }
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump(1);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << text.size() << '\n' << text;
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::string magic, len_line;
  std::getline(in, magic);
  std::getline(in, len_line);
  if (magic != kMagic) throw InputError(path.string() + ": not a checkpoint");
  std::size_t len = 0;
  try {
    len = std::stoull(len_line);
  } catch (const std::exception&) {
    throw InputError(path.string() + ": bad manifest length");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(in.gcount()) != len) {
    throw InputError(path.string() + ": truncated manifest");
  }
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": bad manifest: " + e.what());
  }
  if (manifest.value("endianness", "") != "little" || manifest.value("precision", "") != "float64") {
    throw ConfigError(path.string() + ": unsupported payload encoding");
  }
  ArchSpec spec = parse_arch(manifest.at("arch").get<std::string>());
  if (arch_hash_hex(spec) != manifest.at("arch_hash").get<std::string>()) {
    throw ConfigError(path.string() + ": architecture hash mismatch");
  }
  ModelOptions opts;
  opts.seed = manifest.at("seed").get<std::uint64_t>();
  opts.ablate_lstm = manifest.at("ablate_lstm").get<bool>();
  LoadedCheckpoint out{Model(spec, opts), {manifest.value("source", "")}};
  out.model.set_input_scale(std::bit_cast<double>(manifest.at("input_scale").get<std::uint64_t>()));

  const auto& entries = out.model.store().entries();
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != entries.size()) {
    throw ConfigError(path.string() + ": tensor count differs from the architecture");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& t = tensors[i];
    const auto& e = entries[i];
    if (t.at("name").get<std::string>() != e.name ||
        t.at("shape").get<Shape>() != e.var.value().shape()) {
      throw ConfigError(path.string() + ": tensor " + t.at("name").get<std::string>() +
                        " does not match the architecture");
    }
    const auto offset = t.at("offset").get<std::size_t>();
    const std::size_t n = e.var.value().size();
    if (offset + 8 * n > payload.size()) throw InputError(path.string() + ": truncated payload");
    Var v = e.var;
    auto dst = v.mutable_value().data();
    for (std::size_t j = 0; j < n; ++j) dst[j] = get_le(bytes + offset + 8 * j);
  }
  return out;
}

}  // namespace mmdlstm
