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

#include "mmdlstm/bss.hpp"

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

namespace {

using Cx = std::complex<double>;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<Cx> forward_fft(const std::vector<double>& x, std::size_t len) {
  Eigen::FFT<double> fft;
  std::vector<double> padded(len, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  std::vector<Cx> out;
  fft.fwd(out, padded);
  return out;
}

std::vector<double> inverse_fft(const std::vector<Cx>& x) {
  Eigen::FFT<double> fft;
  std::vector<double> out;
  fft.inv(out, x);
  return out;
}

// out[d] = sum_m a(m) b(m + d), indexed circularly (negative d at len + d).
std::vector<double> correlate(const std::vector<Cx>& fa, const std::vector<Cx>& fb) {
  std::vector<Cx> prod(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i) prod[i] = std::conj(fa[i]) * fb[i];
  return inverse_fft(prod);
}

double energy(const std::vector<double>& x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

Eigen::LLT<Eigen::MatrixXd> factor(Eigen::MatrixXd g, double ridge) {
  const double diag = g.diagonal().mean();
  g.diagonal().array() += ridge * (diag > 0.0 ? diag : 1.0);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw NumericError("bss: Gram matrix factorization failed");
  return llt;
}

}  // namespace

BssProjector::BssProjector(std::vector<std::vector<double>> references, std::size_t filter_len,
                           double ridge)
    : refs_(std::move(references)), taps_(filter_len), ridge_(ridge) {
  if (refs_.empty()) throw InputError("bss: no references");
  if (taps_ == 0) throw InputError("bss: filter length must be at least 1");
  n_ = refs_.front().size();
  for (const auto& r : refs_) {
    if (r.size() != n_) throw InputError("bss: references differ in length");
  }
  fft_len_ = next_pow2(n_ + taps_);
  for (const auto& r : refs_) spectra_.push_back(forward_fft(r, fft_len_));

  const std::size_t J = refs_.size(), L = taps_;
  Eigen::MatrixXd g(J * L, J * L);
  for (std::size_t i = 0; i < J; ++i) {
    for (std::size_t k = i; k < J; ++k) {
      const auto r = correlate(spectra_[i], spectra_[k]);
      for (std::size_t a = 0; a < L; ++a) {
        for (std::size_t b = 0; b < L; ++b) {
          // G[(i,a),(k,b)] = sum_m s_i(m) s_k(m + a - b)
          const std::size_t idx = a >= b ? a - b : fft_len_ - (b - a);
          const double v = r[idx];
          g(static_cast<Eigen::Index>(i * L + a), static_cast<Eigen::Index>(k * L + b)) = v;
          g(static_cast<Eigen::Index>(k * L + b), static_cast<Eigen::Index>(i * L + a)) = v;
        }
      }
    }
  }
  all_ = factor(g, ridge_);
  const auto li = static_cast<Eigen::Index>(L);
  for (std::size_t j = 0; j < J; ++j) {
    const auto o = static_cast<Eigen::Index>(j * L);
    single_.push_back(factor(g.block(o, o, li, li), ridge_));
  }
}

std::vector<double> BssProjector::solve_and_rebuild(
    const Eigen::LLT<Eigen::MatrixXd>& llt, const std::vector<std::size_t>& which,
    const std::vector<std::vector<double>>& corr) const {
  const std::size_t L = taps_;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(which.size() * L));
  for (std::size_t w = 0; w < which.size(); ++w) {
    for (std::size_t a = 0; a < L; ++a) rhs(static_cast<Eigen::Index>(w * L + a)) = corr[which[w]][a];
  }
  const Eigen::VectorXd c = llt.solve(rhs);
  std::vector<Cx> acc(fft_len_, Cx(0.0, 0.0));
  for (std::size_t w = 0; w < which.size(); ++w) {
    std::vector<double> taps(L);
    for (std::size_t a = 0; a < L; ++a) taps[a] = c(static_cast<Eigen::Index>(w * L + a));
    const auto ft = forward_fft(taps, fft_len_);
    const auto& fs = spectra_[which[w]];
    for (std::size_t i = 0; i < fft_len_; ++i) acc[i] += ft[i] * fs[i];
  }
  auto out = inverse_fft(acc);
  out.resize(n_ + L - 1);
  return out;
}

BssDecomposition BssProjector::project(const std::vector<double>& estimate,
                                       std::size_t source) const {
  if (estimate.size() != n_) throw InputError("bss: estimate length differs from references");
  if (source >= refs_.size()) throw InputError("bss: source index out of range");
  const std::size_t len = n_ + taps_ - 1;
  if (estimate == refs_[source]) {
    // Zero distortion by definition; skips the ridge bias of the solve.
    BssDecomposition d{estimate, std::vector<double>(len, 0.0), std::vector<double>(len, 0.0)};
    d.target.resize(len, 0.0);
    return d;
  }
  const auto fe = forward_fft(estimate, fft_len_);
  std::vector<std::vector<double>> corr;
  for (const auto& fs : spectra_) corr.push_back(correlate(fs, fe));  // sum_m s_i(m) e(m + a)

  std::vector<std::size_t> every(refs_.size());
  std::iota(every.begin(), every.end(), 0);
  const auto p_all = solve_and_rebuild(all_, every, corr);
  const auto p_one = solve_and_rebuild(single_[source], {source}, corr);

  BssDecomposition d;
  d.target = p_one;
  d.interference.resize(len);
  d.artifacts.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double e = i < n_ ? estimate[i] : 0.0;
    d.interference[i] = p_all[i] - p_one[i];
    d.artifacts[i] = e - p_all[i];
  }
  return d;
}

BssDecomposition bss_project(const std::vector<double>& estimate,
                             const std::vector<std::vector<double>>& references,
                             std::size_t source, std::size_t filter_len, double ridge) {
  return BssProjector(references, filter_len, ridge).project(estimate, source);
}

double clamped_db(double num, double den) {
  if (num <= 0.0 && den <= 0.0) return -kSdrClamp;
  if (den <= 0.0) return kSdrClamp;
  if (num <= 0.0) return -kSdrClamp;
  return std::clamp(10.0 * std::log10(num / den), -kSdrClamp, kSdrClamp);
}

double sdr(const BssDecomposition& d) {
  double err = 0.0;
  for (std::size_t i = 0; i < d.target.size(); ++i) {
    const double e = d.interference[i] + d.artifacts[i];
    err += e * e;
  }
  return clamped_db(energy(d.target), err);
}

double sir(const BssDecomposition& d) { return clamped_db(energy(d.target), energy(d.interference)); }

double sar(const BssDecomposition& d) {
  double num = 0.0;
  for (std::size_t i = 0; i < d.target.size(); ++i) {
    const double s = d.target[i] + d.interference[i];
    num += s * s;
  }
  return clamped_db(num, energy(d.artifacts));
}

}  // namespace mmdlstm
