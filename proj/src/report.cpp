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

#include "mmdlstm/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mmdlstm/bss.hpp"
#include "mmdlstm/error.hpp"

namespace mmdlstm {

using nlohmann::json;

double SourceScores::mean_sdr() const {
  if (sdr.empty()) return std::nan("");
  return std::accumulate(sdr.begin(), sdr.end(), 0.0) / static_cast<double>(sdr.size());
}

const SourceScores* SongScores::find(const std::string& source) const {
  for (const auto& s : sources) {
    if (s.name == source) return &s;
  }
  return nullptr;
}

double SdrReport::median(const std::string& source) const {
  for (const auto& [name, v] : medians) {
    if (name == source) return v;
  }
  throw InputError("report: no median for " + source);
}

std::vector<std::pair<std::size_t, std::size_t>> eval_windows(std::size_t length,
                                                              std::size_t window,
                                                              std::size_t hop) {
  if (window == 0 || hop == 0) throw InputError("evaluate: window and hop must be positive");
  if (length <= window) return {{0, length}};
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t count = 1 + (length - window + hop - 1) / hop;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t begin = k * hop;
    out.emplace_back(begin, std::min(begin + window, length));
  }
  return out;
}

SongScores evaluate_track(const std::string& song, const std::vector<std::string>& names,
                          const std::vector<AudioClip>& estimates,
                          const std::vector<AudioClip>& references, const EvalConfig& config) {
  if (estimates.size() != names.size() || references.size() < estimates.size()) {
    throw InputError("evaluate: need one reference per estimate");
  }
  const AudioClip& first = references.front();
  for (const auto* set : {&estimates, &references}) {
    for (const auto& c : *set) {
      c.validate();
      if (c.channels() != first.channels() || c.length() != first.length()) {
        throw InputError("evaluate " + song + ": clips differ in shape");
      }
    }
  }
  const double sr = first.sample_rate;
  const auto window = static_cast<std::size_t>(std::llround(config.window_s * sr));
  const auto hop = static_cast<std::size_t>(std::llround(config.hop_s * sr));

  SongScores out{song, {}};
  for (const auto& n : names) out.sources.push_back({n, {}, {}, {}, 0});
  for (const auto& [begin, end] : eval_windows(first.length(), window, hop)) {
    std::vector<std::vector<double>> sdr_c(names.size()), sir_c(names.size()), sar_c(names.size());
    for (std::size_t c = 0; c < first.channels(); ++c) {
      auto cut = [&](const AudioClip& clip) {
        return std::vector<double>(clip.samples[c].begin() + static_cast<std::ptrdiff_t>(begin),
                                   clip.samples[c].begin() + static_cast<std::ptrdiff_t>(end));
      };
      std::vector<std::vector<double>> refs;
      for (const auto& r : references) refs.push_back(cut(r));
      const BssProjector proj(refs, config.filter_len, config.ridge);
      for (std::size_t j = 0; j < names.size(); ++j) {
        const bool silent = std::all_of(refs[j].begin(), refs[j].end(),
                                        [](double v) { return v == 0.0; });
        if (silent) continue;
        const auto d = proj.project(cut(estimates[j]), j);
        sdr_c[j].push_back(sdr(d));
        sir_c[j].push_back(sir(d));
        sar_c[j].push_back(sar(d));
      }
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      auto& s = out.sources[j];
      if (sdr_c[j].empty()) {
        ++s.excluded;
        continue;
      }
      auto avg = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      };
      s.sdr.push_back(avg(sdr_c[j]));
      s.sir.push_back(avg(sir_c[j]));
      s.sar.push_back(avg(sar_c[j]));
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SdrReport aggregate(std::vector<SongScores> songs, const EvalConfig& config) {
  SdrReport r;
  r.config = config;
  r.songs = std::move(songs);
  std::vector<std::string> order;
  for (const auto& song : r.songs) {
    for (const auto& s : song.sources) {
      if (std::find(order.begin(), order.end(), s.name) == order.end()) order.push_back(s.name);
    }
  }
  for (const auto& name : order) {
    std::vector<double> means;
    for (const auto& song : r.songs) {
      const auto* s = song.find(name);
      if (s != nullptr && !s->sdr.empty()) means.push_back(s->mean_sdr());
    }
    r.medians.emplace_back(name, median(means));
  }
  return r;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string report_to_json(const SdrReport& report) {
  json j;
  j["config"] = {{"filter_len", report.config.filter_len},
                 {"window_s", report.config.window_s},
                 {"hop_s", report.config.hop_s},
                 {"ridge", report.config.ridge}};
  j["songs"] = json::array();
  for (const auto& song : report.songs) {
    json js{{"name", song.name}, {"sources", json::array()}};
    for (const auto& s : song.sources) {
      js["sources"].push_back({{"name", s.name},
                               {"sdr", s.sdr},
                               {"sir", s.sir},
                               {"sar", s.sar},
                               {"excluded", s.excluded},
                               {"mean_sdr", finite_or_null(s.mean_sdr())}});
    }
    j["songs"].push_back(std::move(js));
  }
  j["medians"] = json::object();
  for (const auto& [name, v] : report.medians) j["medians"][name] = finite_or_null(v);
  return j.dump(2);
}

SdrReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("scores: ") + e.what());
  }
  EvalConfig config;
  const auto& c = j.at("config");
  config.filter_len = c.at("filter_len").get<std::size_t>();
  config.window_s = c.at("window_s").get<double>();
  config.hop_s = c.at("hop_s").get<double>();
  config.ridge = c.at("ridge").get<double>();
  std::vector<SongScores> songs;
  for (const auto& js : j.at("songs")) {
    SongScores song{js.at("name").get<std::string>(), {}};
    for (const auto& s : js.at("sources")) {
      song.sources.push_back({s.at("name").get<std::string>(), s.at("sdr").get<std::vector<double>>(),
                              s.at("sir").get<std::vector<double>>(),
                              s.at("sar").get<std::vector<double>>(),
                              s.at("excluded").get<std::size_t>()});
    }
    songs.push_back(std::move(song));
  }
  return aggregate(std::move(songs), config);
}

void write_report(const std::filesystem::path& path, const SdrReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << report_to_json(report) << '\n';
}

std::string format_table(const SdrReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(24) << "song";
  for (const auto& [name, v] : report.medians) os << std::right << std::setw(12) << name;
  os << '\n';
  for (const auto& song : report.songs) {
    os << std::left << std::setw(24) << song.name;
    for (const auto& [name, v] : report.medians) {
      const auto* s = song.find(name);
      os << std::right << std::setw(12);
      if (s == nullptr || s->sdr.empty()) {
        os << "-";
      } else {
        os << s->mean_sdr();
      }
    }
    os << '\n';
  }
  os << std::left << std::setw(24) << "median";
  for (const auto& [name, v] : report.medians) os << std::right << std::setw(12) << v;
  os << '\n';
  return os.str();
}

}  // namespace mmdlstm
