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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "mmdlstm/arch.hpp"
#include "mmdlstm/checkpoint.hpp"
#include "mmdlstm/error.hpp"
#include "mmdlstm/inspect.hpp"
#include "mmdlstm/report.hpp"
#include "mmdlstm/separation.hpp"
#include "mmdlstm/train.hpp"

namespace mmdlstm::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  bool fail_on_mismatch = false;
  bool quiet = false;
};

void note(const Common& c, const std::string& msg) {
  if (!c.quiet) std::fprintf(stderr, "%s\n", msg.c_str());
}

/// Warns (or throws with --fail-on-mismatch) when a clip does not match the
/// rate the band layout was derived for.
void check_rate(const Common& c, double rate, double expected, const std::string& what) {
  if (rate == expected) return;
  const std::string msg = what + ": sample rate " + std::to_string(rate) +
                          " Hz differs from the " + std::to_string(expected) +
                          " Hz the band layout assumes";
  if (c.fail_on_mismatch) throw ConfigError(msg);
  std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

/// Tracks below `root`: the directory itself when it holds a mixture, else
/// its track subdirectories.
std::vector<fs::path> track_dirs(const fs::path& root) {
  if (fs::exists(root / "mixture.wav")) return {root};
  auto dirs = list_tracks(root);
  if (dirs.empty()) throw InputError("no tracks (directories with mixture.wav) under " + root.string());
  return dirs;
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; results keep index order.
template <typename Fn>
void for_each_job(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::future<void>> running;
  for (std::size_t i = 0; i < n; ++i) {
    if (running.size() == jobs) {
      running.front().get();
      running.erase(running.begin());
    }
    running.push_back(std::async(std::launch::async, fn, i));
  }
  for (auto& f : running) f.get();
}

WavEncoding parse_encoding(const std::string& s) {
  return s == "pcm16" ? WavEncoding::kPcm16 : WavEncoding::kFloat32;
}

// --- synth-data -------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t tracks = 3;
  double seconds = 8.0;
  double sample_rate = 44100.0;
  std::string out;
};

void run_synth(const SynthArgs& a, const Common& c) {
  make_toy_dataset(a.out, a.seed, a.tracks, a.seconds, a.sample_rate);
  note(c, "wrote " + std::to_string(a.tracks) + " tracks to " + a.out);
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data, arch, out, loss_csv;
  TrainConfig config;
  double lr = 1e-3;
  bool no_augment = false;
  bool ablate_lstm = false;
};

void run_train(TrainArgs a, const Common& c) {
  const ArchSpec spec = a.arch.empty() ? table1_arch() : load_arch(a.arch);
  std::vector<Track> tracks;
  for (const auto& dir : track_dirs(a.data)) {
    tracks.push_back(load_track(dir));
    check_rate(c, tracks.back().mixture.sample_rate, spec.sample_rate, tracks.back().name);
    tracks.back().source(a.config.source);  // fails early on a missing stem
  }
  a.config.adam.alpha = a.lr;
  a.config.augment = !a.no_augment;

  Model model(spec, {a.config.seed, a.ablate_lstm});
  model.set_input_scale(magnitude_scale(tracks, {spec.fft_size, spec.fft_size / 4}));
  note(c, std::to_string(model.parameter_count()) + " parameters, " +
              std::to_string(tracks.size()) + " tracks");
  if (a.config.epochs > 0) {
    Trainer trainer(model, tracks, a.config);
    for (std::size_t e = 0; e < a.config.epochs; ++e) {
      const auto losses = trainer.train_epoch();
      double mean = 0.0;
      for (double l : losses) mean += l;
      mean /= static_cast<double>(std::max<std::size_t>(1, losses.size()));
      note(c, "epoch " + std::to_string(e + 1) + " mean loss " + std::to_string(mean));
      if (!a.loss_csv.empty()) append_loss_csv(a.loss_csv, e + 1, losses);
    }
  }
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_checkpoint(a.out, model, {a.config.source});
  note(c, "saved " + a.out);
}

// --- separate ---------------------------------------------------------------

struct SeparateArgs {
  std::string checkpoints, input, out, wiener = "on", blend, oracle, references, encoding = "float";
  double blend_weight = 0.5;
  std::size_t chunk = 256, jobs = 1, fft = 4096;
};

std::vector<LoadedCheckpoint> load_models(const fs::path& dir) {
  std::vector<LoadedCheckpoint> out;
  for (auto name : kSourceNames) {
    const fs::path p = dir / (std::string(name) + ".ckpt");
    if (fs::exists(p)) out.push_back(load_checkpoint(p));
  }
  if (out.empty()) throw InputError("no <source>.ckpt files in " + dir.string());
  return out;
}

void run_separate(const SeparateArgs& a, const Common& c) {
  if (a.wiener != "on" && a.wiener != "off") throw ConfigError("--wiener expects on or off");
  if (a.blend_weight < 0.0 || a.blend_weight > 1.0) throw ConfigError("--blend-weight must lie in [0, 1]");
  const bool oracle = !a.oracle.empty();
  if (oracle && a.oracle != "ibm") throw ConfigError("unknown oracle '" + a.oracle + "'");
  if (oracle && a.references.empty()) throw ConfigError("--oracle ibm needs --references");
  if (!oracle && a.checkpoints.empty()) throw ConfigError("--checkpoints is required");

  std::vector<LoadedCheckpoint> primary, second;
  StftConfig stft{a.fft, a.fft / 4};
  double rate = 44100.0;
  if (!oracle) {
    primary = load_models(a.checkpoints);
    if (!a.blend.empty()) second = load_models(a.blend);
    stft = {primary.front().model.spec().fft_size, primary.front().model.spec().fft_size / 4};
    rate = primary.front().model.spec().sample_rate;
    for (const auto* set : {&primary, &second})
      for (const auto& m : *set)
        if (m.model.spec().fft_size != stft.fft_size)
          throw ConfigError("checkpoints disagree on the STFT size");
  }
  std::vector<SourceModel> models;
  for (const auto& p : primary) {
    SourceModel sm{p.info.source, &p.model, nullptr, a.blend_weight};
    for (const auto& s : second)
      if (s.info.source == p.info.source) sm.blend_with = &s.model;
    if (!second.empty() && !sm.blend_with)
      throw InputError("--blend directory has no checkpoint for " + p.info.source);
    models.push_back(sm);
  }

  // Inputs: a WAV file, a track directory or a dataset root.
  struct Job {
    std::string name;
    fs::path mixture, out, references;
  };
  std::vector<Job> jobs;
  if (fs::is_regular_file(a.input)) {
    jobs.push_back({fs::path(a.input).stem().string(), a.input, a.out, a.references});
  } else {
    for (const auto& dir : track_dirs(a.input)) {
      const std::string name = dir.filename().string();
      fs::path refs;
      if (oracle) refs = fs::exists(fs::path(a.references) / name) ? fs::path(a.references) / name
                                                                   : fs::path(a.references);
      jobs.push_back({name, dir / "mixture.wav", fs::path(a.out) / name, refs});
    }
  }

  SeparateOptions opt;
  opt.stft = stft;
  opt.wiener = a.wiener == "on";
  const Estimator shared = oracle ? Estimator() : model_estimator(models, a.chunk);
  for_each_job(jobs.size(), a.jobs, [&](std::size_t i) {
    const Job& job = jobs[i];
    const AudioClip mix = read_wav(job.mixture);
    check_rate(c, mix.sample_rate, rate, job.name);
    Estimator est = shared;
    if (oracle) {
      const Track refs = load_track(job.references);
      est = ibm_estimator(refs.source_names, refs.sources, stft);
    }
    write_separated(job.out, separate_track(est, mix, opt), parse_encoding(a.encoding));
  });
  note(c, "separated " + std::to_string(jobs.size()) + " track(s) into " + a.out);
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string estimates, references, out;
  EvalConfig config;
  std::size_t jobs = 1;
};

void run_evaluate(const EvaluateArgs& a, const Common& c) {
  const auto dirs = track_dirs(a.references);
  std::vector<SongScores> songs(dirs.size());
  for_each_job(dirs.size(), a.jobs, [&](std::size_t i) {
    const Track ref = load_track(dirs[i]);
    fs::path est_dir = fs::path(a.estimates) / ref.name;
    if (!fs::is_directory(est_dir)) est_dir = a.estimates;
    std::vector<std::string> names;
    std::vector<AudioClip> estimates;
    std::vector<AudioClip> references = ref.sources;
    // Scored sources come first, in reference order.
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < ref.source_names.size(); ++j) {
      const fs::path p = est_dir / (ref.source_names[j] + ".wav");
      if (!fs::exists(p)) continue;
      names.push_back(ref.source_names[j]);
      estimates.push_back(read_wav(p));
      order.push_back(j);
    }
    if (names.empty()) throw InputError("no estimates for " + ref.name + " in " + est_dir.string());
    for (std::size_t j = 0; j < ref.source_names.size(); ++j)
      if (std::find(order.begin(), order.end(), j) == order.end()) order.push_back(j);
    std::vector<AudioClip> ordered;
    for (std::size_t j : order) ordered.push_back(references[j]);
    check_rate(c, ref.mixture.sample_rate, 44100.0, ref.name);
    songs[i] = evaluate_track(ref.name, names, estimates, ordered, a.config);
  });
  const SdrReport report = aggregate(std::move(songs), a.config);
  write_report(a.out, report);
  std::printf("%s", format_table(report).c_str());
  note(c, "wrote " + a.out);
}

// --- inspect ----------------------------------------------------------------

struct InspectArgs {
  std::string arch, checkpoint, input, slot;
  std::uint64_t seed = 0;
  std::size_t frames = 64;
};

void run_inspect(const InspectArgs& a, const Common& c) {
  if (a.arch.empty() == a.checkpoint.empty())
    throw ConfigError("give exactly one of --arch and --checkpoint");
  std::optional<Model> built;
  std::optional<LoadedCheckpoint> loaded;
  if (!a.arch.empty()) built.emplace(load_arch(a.arch), ModelOptions{a.seed, false});
  else loaded.emplace(load_checkpoint(a.checkpoint));
  const Model& model = built ? *built : loaded->model;
  const ArchSpec& spec = model.spec();

  std::printf("architecture %s (mode %s, lstm units %s)\n", arch_hash_hex(spec).c_str(),
              to_string(spec.mode).c_str(), to_string(spec.lstm_units).c_str());
  std::printf("\nparameters\n");
  for (const auto& item : itemize_params(model))
    std::printf("  %-28s %10zu\n", item.path.c_str(), item.count);
  std::printf("  %-28s %10zu\n", "total", model.parameter_count());
  std::printf("  %-28s %10zu\n", "LSTM blocks (closed form)", lstm_total(spec));

  const auto rf = receptive_field(spec);
  std::printf("\nreceptive field (time frames, convolutional path)\n");
  for (const auto& n : rf.nets)
    std::printf("  %-28s %10zu%s\n", n.name.c_str(), n.frames, n.global ? "  + LSTM (global)" : "");
  std::printf("  %-28s %10zu%s\n", "overall", rf.overall, rf.global ? "  + LSTM (global)" : "");

  if (!a.input.empty()) {
    if (a.slot.empty()) throw ConfigError("--input needs --slot (e.g. band1/d4)");
    const AudioClip clip = read_wav(a.input);
    check_rate(c, clip.sample_rate, spec.sample_rate, a.input);
    const Spectrogram s = stft(clip, {spec.fft_size, spec.fft_size / 4});
    Tensor mag = s.magnitude();
    const std::size_t t = std::min(a.frames, mag.dim(2));
    Tensor cut({mag.dim(0), mag.dim(1), t});
    for (std::size_t ch = 0; ch < mag.dim(0); ++ch)
      for (std::size_t f = 0; f < mag.dim(1); ++f)
        for (std::size_t i = 0; i < t; ++i)
          cut.at({ch, f, i}) = mag.at({ch, f, i}) * model.input_scale();
    const auto norms = feature_map_norms(model, cut, a.slot);
    std::printf("\nfeature-map RMS at %s (%zu frames)\n", a.slot.c_str(), t);
    for (std::size_t i = 0; i < norms.size(); ++i)
      std::printf("  channel %3zu %12.6g%s\n", i, norms[i].rms, norms[i].lstm ? "  (LSTM)" : "");
  }
}

int exit_code(const Error& e) {
  std::fprintf(stderr, "%s: %s\n", to_string(e.kind()), e.what());
  return static_cast<int>(e.kind());
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"MMDenseLSTM music source separation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file of flag values (flags override it)");
  Common common;
  app.add_flag("--quiet", common.quiet, "suppress progress and the config echo");
  app.add_flag("--fail-on-mismatch", common.fail_on_mismatch,
               "treat sample-rate mismatches as errors instead of warnings");

  SynthArgs synth;
  auto* s_cmd = app.add_subcommand("synth-data", "write a synthetic four-stem dataset");
  s_cmd->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  s_cmd->add_option("--tracks", synth.tracks, "number of tracks")->capture_default_str();
  s_cmd->add_option("--seconds", synth.seconds, "track length")->capture_default_str();
  s_cmd->add_option("--sample-rate", synth.sample_rate, "Hz")->capture_default_str();
  s_cmd->add_option("out", synth.out, "output directory")->required();

  TrainArgs train;
  auto* t_cmd = app.add_subcommand("train", "train one source model");
  t_cmd->add_option("--data", train.data, "dataset root or track directory")->required();
  t_cmd->add_option("--arch", train.arch, "architecture file (default: built-in table1)");
  t_cmd->add_option("--source", train.config.source, "target source")->capture_default_str();
  t_cmd->add_option("--out", train.out, "checkpoint to write")->required();
  t_cmd->add_option("--epochs", train.config.epochs, "epochs (0 saves the initialization)")
      ->capture_default_str();
  t_cmd->add_option("--steps", train.config.steps_per_epoch, "steps per epoch")->capture_default_str();
  t_cmd->add_option("--frames", train.config.frames, "excerpt length in STFT frames")
      ->capture_default_str();
  t_cmd->add_option("--batch", train.config.batch, "excerpts per step")->capture_default_str();
  t_cmd->add_option("--lr", train.lr, "Adam step size")->capture_default_str();
  t_cmd->add_option("--seed", train.config.seed, "initialization and sampling seed")
      ->capture_default_str();
  t_cmd->add_option("--fixed-excerpts", train.config.fixed_excerpts,
                    "train on this many excerpts drawn once (0 = fresh batches)")
      ->capture_default_str();
  t_cmd->add_flag("--no-augment", train.no_augment, "disable swap, gain and offset augmentation");
  t_cmd->add_flag("--ablate-lstm", train.ablate_lstm, "build the model without LSTM blocks");
  t_cmd->add_option("--loss-csv", train.loss_csv, "append per-step losses to this CSV");

  SeparateArgs sep;
  auto* p_cmd = app.add_subcommand("separate", "separate a mixture into sources");
  p_cmd->add_option("--checkpoints", sep.checkpoints, "directory of <source>.ckpt files");
  p_cmd->add_option("--input", sep.input, "WAV file, track directory or dataset root")->required();
  p_cmd->add_option("--out", sep.out, "output directory")->required();
  p_cmd->add_option("--wiener", sep.wiener, "multichannel Wiener post-filter: on|off")
      ->capture_default_str();
  p_cmd->add_option("--blend", sep.blend, "second checkpoint directory to blend with");
  p_cmd->add_option("--blend-weight", sep.blend_weight, "weight of the first model")
      ->capture_default_str();
  p_cmd->add_option("--oracle", sep.oracle, "use oracle masks instead of models: ibm");
  p_cmd->add_option("--references", sep.references, "true sources for --oracle");
  p_cmd->add_option("--fft", sep.fft, "STFT size for --oracle")->capture_default_str();
  p_cmd->add_option("--chunk", sep.chunk, "inference chunk in frames (0 = whole track)")
      ->capture_default_str();
  p_cmd->add_option("--encoding", sep.encoding, "float|pcm16")
      ->check(CLI::IsMember({"float", "pcm16"}))
      ->capture_default_str();
  p_cmd->add_option("--jobs", sep.jobs, "tracks processed in parallel")->capture_default_str();

  EvaluateArgs ev;
  auto* e_cmd = app.add_subcommand("evaluate", "score estimates against references");
  e_cmd->add_option("--estimates", ev.estimates, "estimates root (one directory per track)")
      ->required();
  e_cmd->add_option("--references", ev.references, "dataset root or track directory")->required();
  e_cmd->add_option("--out", ev.out, "JSON scores file")->required();
  e_cmd->add_option("--filter-len", ev.config.filter_len, "distortion filter taps")
      ->capture_default_str();
  e_cmd->add_option("--window", ev.config.window_s, "window seconds")->capture_default_str();
  e_cmd->add_option("--hop", ev.config.hop_s, "hop seconds")->capture_default_str();
  e_cmd->add_option("--jobs", ev.jobs, "tracks scored in parallel")->capture_default_str();

  InspectArgs in;
  auto* i_cmd = app.add_subcommand("inspect", "parameter itemization and receptive field");
  i_cmd->add_option("--arch", in.arch, "architecture file");
  i_cmd->add_option("--checkpoint", in.checkpoint, "checkpoint file");
  i_cmd->add_option("--seed", in.seed, "initialization seed for --arch")->capture_default_str();
  i_cmd->add_option("--input", in.input, "WAV for feature-map norms");
  i_cmd->add_option("--slot", in.slot, "slot for feature-map norms, e.g. band1/d4");
  i_cmd->add_option("--frames", in.frames, "frames of --input to use")->capture_default_str();

  std::vector<std::string> argv(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (!common.quiet) {
    std::string echo = "quiet=" + std::string(common.quiet ? "true" : "false") +
                       "\nfail-on-mismatch=" + (common.fail_on_mismatch ? "true" : "false") + "\n";
    for (const auto* sub : app.get_subcommands()) {
      echo += "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false);
    }
    std::fprintf(stderr, "# resolved configuration\n%s", echo.c_str());
  }

  try {
    if (*s_cmd) run_synth(synth, common);
    else if (*t_cmd) run_train(train, common);
    else if (*p_cmd) run_separate(sep, common);
    else if (*e_cmd) run_evaluate(ev, common);
    else if (*i_cmd) run_inspect(in, common);
  } catch (const Error& e) {
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace mmdlstm::cli
