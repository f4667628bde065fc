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

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace mmdlstm {

inline constexpr double kSdrClamp = 300.0;

/// Estimate split into target, interference and artifact parts, each of
/// length n + filter_len - 1 (the estimate is zero-padded at the end).
struct BssDecomposition {
  std::vector<double> target;
  std::vector<double> interference;
  std::vector<double> artifacts;
};

/// Least-squares projections onto the references delayed by 0..L-1 taps.
/// Gram matrices come from FFT cross-correlations and are factored once, so
/// several estimates can be scored against the same references cheaply.
/// Singular Gram matrices are handled with a ridge of
/// ridge * (mean diagonal) added to the diagonal.
class BssProjector {
 public:
  BssProjector(std::vector<std::vector<double>> references, std::size_t filter_len,
               double ridge = 1e-10);

  BssDecomposition project(const std::vector<double>& estimate, std::size_t source) const;

  std::size_t sources() const { return refs_.size(); }
  std::size_t length() const { return n_; }
  std::size_t filter_len() const { return taps_; }

 private:
  std::vector<double> solve_and_rebuild(const Eigen::LLT<Eigen::MatrixXd>& llt,
                                        const std::vector<std::size_t>& which,
                                        const std::vector<std::vector<double>>& corr) const;

  std::vector<std::vector<double>> refs_;
  std::size_t n_ = 0, taps_ = 0, fft_len_ = 0;
  double ridge_;
  std::vector<std::vector<std::complex<double>>> spectra_;
  Eigen::LLT<Eigen::MatrixXd> all_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> single_;
};

BssDecomposition bss_project(const std::vector<double>& estimate,
                             const std::vector<std::vector<double>>& references,
                             std::size_t source, std::size_t filter_len, double ridge = 1e-10);

/// 10 log10(|target|^2 / |interference + artifacts|^2), clamped to +-300 dB.
double sdr(const BssDecomposition& d);
double sir(const BssDecomposition& d);
double sar(const BssDecomposition& d);

/// 10 log10(num / den) with the same clamp.
double clamped_db(double num, double den);

}  // namespace mmdlstm
