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

#include "mmdlstm/separation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

namespace {

void check_same_shapes(const std::vector<Tensor>& xs, const char* who) {
  if (xs.empty()) throw InputError(std::string(who) + ": no sources");
  for (const auto& x : xs) {
    if (x.shape() != xs.front().shape()) {
      throw InputError(std::string(who) + ": shape mismatch " + shape_string(x.shape()) +
                       " vs " + shape_string(xs.front().shape()));
    }
  }
}

}  // namespace

void SourceEstimateSet::validate() const {
  if (magnitudes.size() != names.size()) throw InputError("estimates: names/magnitudes differ");
  check_same_shapes(magnitudes, "estimates");
  for (const auto& m : magnitudes) {
    for (double v : m.data()) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("estimates: negative or non-finite magnitude");
    }
  }
}

std::vector<Tensor> ideal_binary_mask(const std::vector<Tensor>& sources) {
  if (sources.size() < 2) throw InputError("ideal_binary_mask: need at least two sources");
  check_same_shapes(sources, "ideal_binary_mask");
  std::vector<Tensor> masks(sources.size(), Tensor::zeros_like(sources.front()));
  const std::size_t n = sources.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < sources.size(); ++j) {
      if (sources[j][i] > sources[best][i]) best = j;
    }
    masks[best][i] = 1.0;
  }
  return masks;
}

std::vector<Tensor> soft_mask(const std::vector<Tensor>& powers, double floor) {
  check_same_shapes(powers, "soft_mask");
  std::vector<Tensor> masks(powers.size(), Tensor::zeros_like(powers.front()));
  const double uniform = 1.0 / static_cast<double>(powers.size());
  for (std::size_t i = 0; i < powers.front().size(); ++i) {
    double total = 0.0;
    for (const auto& p : powers) {
      if (p[i] < 0.0) throw InputError("soft_mask: negative power");
      total += p[i];
    }
    for (std::size_t j = 0; j < powers.size(); ++j) {
      masks[j][i] = total < floor ? uniform : powers[j][i] / total;
    }
  }
  return masks;
}

std::vector<Spectrogram> multichannel_wiener(const Spectrogram& mix,
                                             const std::vector<Tensor>& magnitudes,
                                             const WienerOptions& options) {
  using Mat = Eigen::MatrixXcd;
  using Vec = Eigen::VectorXcd;
  check_same_shapes(magnitudes, "multichannel_wiener");
  const std::size_t C = mix.channels, F = mix.bins, T = mix.frames, J = magnitudes.size();
  if (magnitudes.front().shape() != Shape{C, F, T}) {
    throw InputError("multichannel_wiener: estimates " + shape_string(magnitudes.front().shape()) +
                     " do not match the mixture");
  }
  const auto ci = static_cast<Eigen::Index>(C);

  double mix_power = 0.0;
  for (const auto& x : mix.data) mix_power += std::norm(x);
  mix_power /= static_cast<double>(std::max<std::size_t>(mix.data.size(), 1));
  const double eps = std::max(options.eps_scale * mix_power, 1e-300);

  // v_j(f, t): power averaged over channels.
  std::vector<std::vector<double>> power(J, std::vector<double>(F * T, 0.0));
  for (std::size_t j = 0; j < J; ++j) {
    const Tensor& m = magnitudes[j];
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t t = 0; t < T; ++t) {
          const double a = m[(c * F + f) * T + t];
          power[j][f * T + t] += a * a / static_cast<double>(C);
        }
      }
    }
  }

  std::vector<Spectrogram> out(J, mix.zeros_like());
  std::vector<Mat> cov(J, Mat::Identity(ci, ci));
  Vec x(ci);
  for (std::size_t f = 0; f < F; ++f) {
    if (!options.identity_covariance) {
      for (std::size_t j = 0; j < J; ++j) {
        Mat r = Mat::Zero(ci, ci);
        double weight = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          const double v = power[j][f * T + t];
          if (v == 0.0) continue;
          for (std::size_t c = 0; c < C; ++c) x(static_cast<Eigen::Index>(c)) = mix.at(c, t, f);
          r += v * x * x.adjoint();
          weight += v;
        }
        const double trace = r.trace().real();
        cov[j] = (weight > 0.0 && trace > 0.0) ? Mat(r * (static_cast<double>(C) / trace))
                                               : Mat(Mat::Identity(ci, ci));
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) x(static_cast<Eigen::Index>(c)) = mix.at(c, t, f);
      Mat total = eps * Mat::Identity(ci, ci);
      double vsum = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        total += power[j][f * T + t] * cov[j];
        vsum += power[j][f * T + t];
      }
      const Vec z = total.partialPivLu().solve(x);
      Vec residual = x;
      std::vector<Vec> y(J);
      for (std::size_t j = 0; j < J; ++j) {
        y[j] = power[j][f * T + t] * (cov[j] * z);
        residual -= y[j];
      }
      for (std::size_t j = 0; j < J; ++j) {
        const double share = vsum > 0.0 ? power[j][f * T + t] / vsum : 1.0 / static_cast<double>(J);
        y[j] += share * residual;
        for (std::size_t c = 0; c < C; ++c) out[j].at(c, t, f) = y[j](static_cast<Eigen::Index>(c));
      }
    }
  }
  return out;
}

SourceEstimateSet blend(const SourceEstimateSet& a, const SourceEstimateSet& b, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw InputError("blend: weight must lie in [0, 1]");
  if (a.names != b.names) throw InputError("blend: source lists differ");
  SourceEstimateSet out;
  out.names = a.names;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a.magnitudes[j].shape() != b.magnitudes[j].shape()) throw InputError("blend: shape mismatch");
    Tensor m = Tensor::zeros_like(a.magnitudes[j]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = w * a.magnitudes[j][i] + (1.0 - w) * b.magnitudes[j][i];
    }
    out.magnitudes.push_back(std::move(m));
  }
  return out;
}

Tensor infer_chunked(const Model& model, const Tensor& mag, std::size_t chunk) {
  const auto& s = mag.shape();
  if (s.size() != 3) throw InputError("inference: expected magnitude [c, f, t]");
  const std::size_t T = s[2];
  if (chunk == 0 || chunk >= T) return model.infer(mag);
  Tensor out = Tensor::zeros_like(mag);
  for (std::size_t begin = 0; begin < T; begin += chunk) {
    const std::size_t len = std::min(chunk, T - begin);
    Tensor part({s[0], s[1], len});
    for (std::size_t r = 0; r < s[0] * s[1]; ++r) {
      for (std::size_t t = 0; t < len; ++t) part[r * len + t] = mag[r * T + begin + t];
    }
    const Tensor y = model.infer(part);
    for (std::size_t r = 0; r < s[0] * s[1]; ++r) {
      for (std::size_t t = 0; t < len; ++t) out[r * T + begin + t] = y[r * len + t];
    }
  }
  return out;
}

SeparatedTrack separate_track(const Estimator& estimator, const AudioClip& mixture,
                              const SeparateOptions& options) {
  mixture.validate();
  const Spectrogram mix = stft(mixture, options.stft);
  SourceEstimateSet est = estimator(mix);
  est.validate();
  if (est.magnitudes.front().shape() != Shape{mix.channels, mix.bins, mix.frames}) {
    throw InputError("separate: estimates do not match the mixture spectrogram");
  }
  if (options.wiener) {
    est.complex = multichannel_wiener(mix, est.magnitudes);
  } else {
    for (const auto& m : est.magnitudes) est.complex.push_back(mix.with_magnitude(m));
  }

  SeparatedTrack out;
  out.names = est.names;
  for (const auto& spec : est.complex) out.sources.push_back(istft(spec));
  for (std::size_t j = 0; j < out.names.size(); ++j) {
    if (out.names[j] != kSourceNames[0]) continue;
    AudioClip acc = mixture;
    for (std::size_t c = 0; c < acc.channels(); ++c) {
      for (std::size_t n = 0; n < acc.length(); ++n) acc.samples[c][n] -= out.sources[j].samples[c][n];
    }
    out.accompaniment = std::move(acc);
  }
  return out;
}

Estimator model_estimator(std::vector<SourceModel> models, std::size_t chunk_frames) {
  return [models = std::move(models), chunk_frames](const Spectrogram& mix) {
    const Tensor mag = mix.magnitude();
    SourceEstimateSet est;
    for (const auto& sm : models) {
      if (sm.model == nullptr) throw InputError("separate: missing model for " + sm.name);
      Tensor m = infer_chunked(*sm.model, mag, chunk_frames);
      if (sm.blend_with != nullptr) {
        const Tensor b = infer_chunked(*sm.blend_with, mag, chunk_frames);
        const double w = sm.blend_weight;
        if (!(w >= 0.0 && w <= 1.0)) throw InputError("blend: weight must lie in [0, 1]");
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = w * m[i] + (1.0 - w) * b[i];
      }
      est.names.push_back(sm.name);
      est.magnitudes.push_back(std::move(m));
    }
    return est;
  };
}

Estimator ibm_estimator(std::vector<std::string> names, std::vector<AudioClip> references,
                        const StftConfig& config) {
  if (names.size() != references.size()) throw InputError("ibm: names and references differ");
  return [names = std::move(names), refs = std::move(references), config](const Spectrogram& mix) {
    std::vector<Tensor> mags;
    for (const auto& r : refs) mags.push_back(stft(r, config).magnitude());
    const auto masks = ideal_binary_mask(mags);
    const Tensor mix_mag = mix.magnitude();
    SourceEstimateSet est;
    est.names = names;
    for (const auto& mask : masks) {
      if (mask.shape() != mix_mag.shape()) throw InputError("ibm: reference length differs from mixture");
      Tensor m = mix_mag;
      for (std::size_t i = 0; i < m.size(); ++i) m[i] *= mask[i];
      est.magnitudes.push_back(std::move(m));
    }
    return est;
  };
}

void write_separated(const std::filesystem::path& dir, const SeparatedTrack& track,
                     WavEncoding encoding) {
  for (std::size_t j = 0; j < track.names.size(); ++j) {
    write_wav(dir / (track.names[j] + ".wav"), track.sources[j], encoding);
  }
  if (track.accompaniment) {
    write_wav(dir / (std::string(kAccompaniment) + ".wav"), *track.accompaniment, encoding);
  }
}

}  // namespace mmdlstm
