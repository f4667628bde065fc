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

#include <filesystem>
#include <string>
#include <vector>

#include "mmdlstm/audio.hpp"

namespace mmdlstm {

struct EvalConfig {
  std::size_t filter_len = 512;
  double window_s = 30.0;
  double hop_s = 15.0;
  double ridge = 1e-10;
};

/// Scores of one source over the windows of one song. A window whose
/// reference is silent in every channel is skipped and counted.
struct SourceScores {
  std::string name;
  std::vector<double> sdr, sir, sar;  // per valid window, channel-averaged
  std::size_t excluded = 0;
  double mean_sdr() const;
};

struct SongScores {
  std::string name;
  std::vector<SourceScores> sources;
  const SourceScores* find(const std::string& source) const;
};

struct SdrReport {
  EvalConfig config;
  std::vector<SongScores> songs;
  /// Per source: median over songs of the per-song mean SDR.
  std::vector<std::pair<std::string, double>> medians;
  double median(const std::string& source) const;
};

/// [begin, end) sample ranges: one window when the clip fits, otherwise
/// windows every hop with the last one cut at the clip end.
std::vector<std::pair<std::size_t, std::size_t>> eval_windows(std::size_t length,
                                                              std::size_t window,
                                                              std::size_t hop);

/// `references` holds every true source (they span the interference
/// subspace); `estimates[j]` is scored against `references[j]` for the
/// first estimates.size() names.
SongScores evaluate_track(const std::string& song, const std::vector<std::string>& names,
                          const std::vector<AudioClip>& estimates,
                          const std::vector<AudioClip>& references, const EvalConfig& config);

double median(std::vector<double> values);

/// Fills `medians` from the per-song means; songs without a valid window
/// for a source do not enter that source's median.
SdrReport aggregate(std::vector<SongScores> songs, const EvalConfig& config = {});

/// JSON schema:
///   {"config": {...}, "songs": [{"name", "sources": [{"name", "sdr": [...],
///    "sir": [...], "sar": [...], "excluded", "mean_sdr"}]}],
///    "medians": {"vocals": x, ...}}
std::string report_to_json(const SdrReport& report);
SdrReport report_from_json(const std::string& text);
void write_report(const std::filesystem::path& path, const SdrReport& report);
std::string format_table(const SdrReport& report);

}  // namespace mmdlstm
