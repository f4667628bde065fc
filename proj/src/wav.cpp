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

#include "mmdlstm/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

AudioClip AudioClip::zeros(std::size_t channels, std::size_t length, double sample_rate) {
  AudioClip clip;
  clip.samples.assign(channels, std::vector<double>(length, 0.0));
  clip.sample_rate = sample_rate;
  return clip;
}

void AudioClip::validate() const {
  if (!(sample_rate > 0.0)) throw InputError("audio: sample rate must be positive");
  for (const auto& ch : samples) {
    if (ch.size() != length()) throw InputError("audio: channels differ in length");
  }
}

namespace {

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t pos) {
  if (pos + sizeof(T) > buf.size()) throw InputError("wav: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("wav: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw InputError("wav: " + path.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_size = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto size = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && size >= 26) format = read_le<std::uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_size = std::min<std::size_t>(size, buf.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || data_pos == 0) throw InputError("wav: missing fmt or data chunk in " + path.string());
  if (channels < 1 || channels > 2) throw InputError("wav: only mono and stereo are supported");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw InputError("wav: unsupported encoding (format " + std::to_string(format) + ", " +
                     std::to_string(bits) + " bits)");
  }
  const std::size_t frame_bytes = std::size_t(channels) * (bits / 8);
  const std::size_t frames = data_size / frame_bytes;
  AudioClip clip = AudioClip::zeros(channels, frames, double(rate));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_pos + i * frame_bytes + c * (bits / 8);
      clip.samples[c][i] = pcm16 ? double(read_le<std::int16_t>(buf, at)) / 32768.0
                                 : double(read_le<float>(buf, at));
    }
  }
  clip.validate();
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  clip.validate();
  if (clip.channels() < 1 || clip.channels() > 2) {
    throw InputError("wav: only mono and stereo are supported");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("wav: cannot write " + path.string());
  const std::uint16_t channels = std::uint16_t(clip.channels());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t rate = std::uint32_t(std::lround(clip.sample_rate));
  const std::uint32_t data_size = std::uint32_t(clip.length() * channels * (bits / 8));
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, format);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * channels * (bits / 8));
  put_le<std::uint16_t>(out, std::uint16_t(channels * (bits / 8)));
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_size);
  for (std::size_t i = 0; i < clip.length(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = clip.samples[c][i];
      if (encoding == WavEncoding::kPcm16) {
        const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, std::int16_t(q));
      } else {
        put_le<float>(out, float(v));
      }
    }
  }
  if (!out) throw InputError("wav: write failed for " + path.string());
}

}  // namespace mmdlstm
