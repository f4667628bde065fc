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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "checks.hpp"
#include "mmdlstm/bss.hpp"
#include "mmdlstm/error.hpp"
#include "mmdlstm/report.hpp"

namespace mmdlstm {
namespace {

using Signal = std::vector<double>;

Signal noise(std::size_t n, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  Signal x(n);
  for (double& v : x) v = g(rng);
  return x;
}

double energy(const Signal& x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); }

Signal delayed(const Signal& x, std::size_t d) {
  Signal y(x.size(), 0.0);
  for (std::size_t i = d; i < x.size(); ++i) y[i] = x[i - d];
  return y;
}

Signal padded(const Signal& x, std::size_t len) {
  Signal y = x;
  y.resize(len, 0.0);
  return y;
}

TEST(Bss, PerfectEstimate) {
  std::mt19937_64 rng(1);
  const std::vector<Signal> refs{noise(800, rng), noise(800, rng)};
  const auto d = bss_project(refs[0], refs, 0, 8);
  ASSERT_EQ(d.target.size(), 807u);
  const Signal want = padded(refs[0], 807);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(d.target[i], want[i], 1e-9);
  EXPECT_LT(energy(d.interference) + energy(d.artifacts), 1e-15 * energy(want));
  EXPECT_EQ(sdr(d), kSdrClamp);
}

TEST(Bss, GainIsAbsorbed) {
  std::mt19937_64 rng(2);
  const std::vector<Signal> refs{noise(800, rng), noise(800, rng)};
  Signal est = refs[0];
  for (double& v : est) v *= 2.0;
  const auto d = bss_project(est, refs, 0, 4);
  EXPECT_LT(energy(d.artifacts), 1e-12 * energy(est));
  EXPECT_GT(sdr(d), 100.0);
}

TEST(Bss, DelayNeedsEnoughTaps) {
  std::mt19937_64 rng(3);
  std::vector<Signal> refs{noise(1000, rng), noise(1000, rng)};
  std::fill(refs[0].end() - 8, refs[0].end(), 0.0);  // nothing is shifted out
  const Signal est = delayed(refs[0], 3);
  const auto long_filter = bss_project(est, refs, 0, 8);
  EXPECT_LT(energy(long_filter.artifacts), 1e-12 * energy(est));
  const auto short_filter = bss_project(est, refs, 0, 1);
  EXPECT_GT(energy(short_filter.artifacts), 0.5 * energy(est));
  EXPECT_LT(sdr(short_filter), 0.0);
}

TEST(Bss, ZeroDecibels) {
  std::mt19937_64 rng(4);
  const Signal r = noise(500, rng);
  Signal n = noise(500, rng);
  const double k = std::inner_product(n.begin(), n.end(), r.begin(), 0.0) / energy(r);
  for (std::size_t i = 0; i < n.size(); ++i) n[i] -= k * r[i];
  const double s = std::sqrt(energy(r) / energy(n));
  Signal est = r;
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += s * n[i];
  EXPECT_NEAR(sdr(bss_project(est, {r}, 0, 1)), 0.0, 1e-6);
}

TEST(Bss, InterferenceFromOtherSources) {
  std::mt19937_64 rng(5);
  const std::vector<Signal> refs{noise(600, rng), noise(600, rng)};
  Signal est = refs[0];
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.5 * refs[1][i];
  const auto d = bss_project(est, refs, 0, 1);
  EXPECT_LT(energy(d.artifacts), 1e-12 * energy(est));
  // target keeps the part of refs[1] that is correlated with refs[0]
  const double k = 0.5 * std::inner_product(refs[1].begin(), refs[1].end(), refs[0].begin(), 0.0) /
                   energy(refs[0]);
  Signal target(600), interf(600);
  for (std::size_t i = 0; i < 600; ++i) {
    target[i] = (1.0 + k) * refs[0][i];
    interf[i] = est[i] - target[i];
    EXPECT_NEAR(d.target[i], target[i], 1e-9);
    EXPECT_NEAR(d.interference[i], interf[i], 1e-9);
  }
  EXPECT_NEAR(sir(d), 10.0 * std::log10(energy(target) / energy(interf)), 1e-6);
}

TEST(Bss, TargetIsOrthogonalToTheError) {
  std::mt19937_64 rng(6);
  const std::vector<Signal> refs{noise(700, rng), noise(700, rng), noise(700, rng)};
  Signal est = noise(700, rng);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += refs[1][i];
  const auto d = bss_project(est, refs, 1, 16);
  double dot = 0.0;
  for (std::size_t i = 0; i < d.target.size(); ++i)
    dot += d.target[i] * (d.interference[i] + d.artifacts[i]);
  EXPECT_LT(std::abs(dot), 1e-8 * energy(est));
}

TEST(Bss, ScaleInvarianceAndNesting) {
  std::mt19937_64 rng(7);
  const std::vector<Signal> refs{noise(900, rng), noise(900, rng)};
  Signal est = noise(900, rng, 0.3);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += refs[0][i];
  Signal scaled = est;
  for (double& v : scaled) v *= 3.5;
  EXPECT_NEAR(sdr(bss_project(est, refs, 0, 8)), sdr(bss_project(scaled, refs, 0, 8)), 1e-9);
  double previous = 0.0;
  for (std::size_t taps : {16, 8, 4, 2, 1}) {
    const double art = energy(bss_project(est, refs, 0, taps).artifacts);
    EXPECT_GE(art, previous * (1.0 - 1e-12)) << taps;
    previous = art;
  }
}

TEST(Bss, ProjectorMatchesOneShot) {
  std::mt19937_64 rng(8);
  const std::vector<Signal> refs{noise(400, rng), noise(400, rng)};
  const BssProjector proj(refs, 6);
  const Signal est = noise(400, rng);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto a = proj.project(est, j), b = bss_project(est, refs, j, 6);
    for (std::size_t i = 0; i < a.target.size(); ++i) EXPECT_NEAR(a.target[i], b.target[i], 1e-12);
  }
}

TEST(Bss, SilentReferenceUsesTheRidge) {
  std::mt19937_64 rng(9);
  const std::vector<Signal> refs{noise(300, rng), Signal(300, 0.0)};
  const auto d = bss_project(refs[0], refs, 0, 4);
  EXPECT_TRUE(std::isfinite(sdr(d)));
  EXPECT_GT(sdr(d), 80.0);
}

TEST(Bss, PropertiesCheck) {
  const auto r = checks::sdr_properties();
  EXPECT_TRUE(r.passed) << r.summary;
}

TEST(Bss, Clamp) {
  EXPECT_EQ(clamped_db(1.0, 0.0), kSdrClamp);
  EXPECT_EQ(clamped_db(0.0, 1.0), -kSdrClamp);
  EXPECT_DOUBLE_EQ(clamped_db(100.0, 1.0), 20.0);
}

TEST(Windows, Layout) {
  using W = std::vector<std::pair<std::size_t, std::size_t>>;
  EXPECT_EQ(eval_windows(20, 30, 15), (W{{0, 20}}));
  EXPECT_EQ(eval_windows(30, 30, 15), (W{{0, 30}}));
  EXPECT_EQ(eval_windows(50, 30, 15), (W{{0, 30}, {15, 45}, {30, 50}}));
  EXPECT_EQ(eval_windows(60, 30, 15), (W{{0, 30}, {15, 45}, {30, 60}}));
  EXPECT_THROW(eval_windows(60, 0, 15), InputError);
}

AudioClip stereo(const Signal& l, const Signal& r) { return AudioClip{{l, r}, 100.0}; }

TEST(EvaluateTrack, SilentWindowsAreExcluded) {
  std::mt19937_64 rng(10);
  Signal v = noise(300, rng), d = noise(300, rng);
  std::fill(v.begin(), v.begin() + 150, 0.0);  // vocals silent in the first window
  const std::vector<AudioClip> refs{stereo(v, v), stereo(d, d)};
  EvalConfig cfg;
  cfg.filter_len = 4;
  cfg.window_s = 1.5;
  cfg.hop_s = 1.5;
  const SongScores s = evaluate_track("song", {"vocals", "drums"}, refs, refs, cfg);
  ASSERT_EQ(s.sources.size(), 2u);
  EXPECT_EQ(s.sources[0].excluded, 1u);
  EXPECT_EQ(s.sources[0].sdr.size(), 1u);
  EXPECT_EQ(s.sources[1].sdr.size(), 2u);
  EXPECT_EQ(s.sources[1].mean_sdr(), kSdrClamp);
  EXPECT_THROW(evaluate_track("song", {"vocals"}, {}, refs, cfg), InputError);
}

SourceScores scores(const std::string& name, std::vector<double> sdr) {
  SourceScores s;
  s.name = name;
  s.sir = s.sar = sdr;
  s.sdr = std::move(sdr);
  return s;
}

TEST(Aggregate, MedianOfSongMeans) {
  EXPECT_EQ(median({9, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 9}), 3.0);
  EXPECT_TRUE(std::isnan(median({})));
  const SdrReport one = aggregate({SongScores{"a", {scores("vocals", {4.5})}}});
  EXPECT_EQ(one.median("vocals"), 4.5);
  const SdrReport three = aggregate({SongScores{"a", {scores("vocals", {0.0, 2.0})}},
                                     SongScores{"b", {scores("vocals", {2.0})}},
                                     SongScores{"c", {scores("vocals", {9.0, 9.0, 9.0})}}});
  EXPECT_EQ(three.median("vocals"), 2.0);
}

TEST(Aggregate, RandomReportRecomputed) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 15.0);
  std::uniform_int_distribution<int> windows(0, 5);
  const std::vector<std::string> names{"vocals", "drums", "bass", "other"};
  std::vector<SongScores> songs;
  for (int k = 0; k < 7; ++k) {
    SongScores song{"song" + std::to_string(k), {}};
    for (const auto& n : names) {
      std::vector<double> v(static_cast<std::size_t>(windows(rng)));
      for (double& x : v) x = u(rng);
      song.sources.push_back(scores(n, v));
    }
    songs.push_back(song);
  }
  const SdrReport r = aggregate(songs);
  for (const auto& n : names) {
    std::vector<double> means;
    for (const auto& song : songs)
      for (const auto& s : song.sources) {
        if (s.name != n || s.sdr.empty()) continue;
        double total = 0.0;
        for (double x : s.sdr) total += x;
        means.push_back(total / static_cast<double>(s.sdr.size()));
      }
    std::sort(means.begin(), means.end());
    const std::size_t m = means.size();
    const double want = m % 2 ? means[m / 2] : (means[m / 2 - 1] + means[m / 2]) / 2.0;
    EXPECT_NEAR(r.median(n), want, 1e-12) << n;
  }
}

TEST(Report, JsonRoundTrip) {
  EvalConfig cfg;
  cfg.filter_len = 64;
  SongScores a{"a", {scores("vocals", {1.25, -3.5}), scores("drums", {})}};
  a.sources[1].excluded = 2;
  const SdrReport r = aggregate({a, SongScores{"b", {scores("vocals", {7.0})}}}, cfg);
  const SdrReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.config.filter_len, 64u);
  ASSERT_EQ(back.songs.size(), 2u);
  EXPECT_EQ(back.songs[0].sources[0].sdr, (std::vector<double>{1.25, -3.5}));
  EXPECT_EQ(back.songs[0].find("drums")->excluded, 2u);
  EXPECT_EQ(back.median("vocals"), r.median("vocals"));
  EXPECT_EQ(report_to_json(back), report_to_json(r));
  EXPECT_NE(format_table(r).find("vocals"), std::string::npos);
  EXPECT_THROW(report_from_json("{not json"), InputError);
}

}  // namespace
}  // namespace mmdlstm
