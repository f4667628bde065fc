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

#include "mmdlstm/error.hpp"
#include "mmdlstm/separation.hpp"
#include "mmdlstm/train.hpp"

namespace mmdlstm {

namespace fs = std::filesystem;

const AudioClip& Track::source(const std::string& name) const {
  for (std::size_t i = 0; i < source_names.size(); ++i) {
    if (source_names[i] == name) return sources[i];
  }
  throw InputError("track " + this->name + ": no source " + name);
}

std::vector<fs::path> list_tracks(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("dataset: not a directory: " + root.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "mixture.wav")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Track load_track(const fs::path& dir) {
  Track t;
  t.name = dir.filename().string();
  t.mixture = read_wav(dir / "mixture.wav");
  for (auto name : kSourceNames) {
    const fs::path p = dir / (std::string(name) + ".wav");
    if (!fs::exists(p)) throw InputError("track " + t.name + ": missing " + p.filename().string());
    AudioClip clip = read_wav(p);
    if (clip.channels() != t.mixture.channels() || clip.length() != t.mixture.length()) {
      throw InputError("track " + t.name + ": " + std::string(name) + " differs from the mixture");
    }
    t.source_names.emplace_back(name);
    t.sources.push_back(std::move(clip));
  }
  return t;
}

}  // namespace mmdlstm
