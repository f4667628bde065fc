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

// Raw compute kernels behind the differentiable ops.
//
// The top-level functions are the OpenMP versions used by the engine. The
// `reference` namespace holds straightforward serial loops with the same
// signatures; tests compare the two and bench/kernels_bench.cpp times them.
// All buffers are row-major and the output buffers must be pre-sized.
// Accumulating kernels (names ending in _acc) add into their output.

#include <cstddef>
#include <span>

namespace mmdlstm::kernels {

/// Feature-map layout [n, c, f, t].
struct MapDims {
  std::size_t n = 1, c = 1, f = 1, t = 1;
  std::size_t size() const { return n * c * f * t; }
};

struct ConvGeometry {
  std::size_t c_out = 1;
  std::size_t kh = 1, kw = 1;
  std::size_t pad_f = 0, pad_t = 0;

  std::size_t out_f(const MapDims& in) const { return in.f + 2 * pad_f + 1 - kh; }
  std::size_t out_t(const MapDims& in) const { return in.t + 2 * pad_t + 1 - kw; }
};

// conv2d: cross-correlation, kernel layout [c_out, c_in, kh, kw].
void conv2d_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                    std::span<const double> bias, const ConvGeometry& g, std::span<double> y);
void conv2d_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                               const MapDims& xd, const ConvGeometry& g, std::span<double> dx);
void conv2d_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                const MapDims& xd, const ConvGeometry& g, std::span<double> dw,
                                std::span<double> dbias);

// 2x2 average pooling with stride 2 over (f, t). Requires even f and t.
void avgpool2_forward(std::span<const double> x, const MapDims& xd, std::span<double> y);
void avgpool2_backward_acc(std::span<const double> dy, const MapDims& xd, std::span<double> dx);

// Stride-2 transposed convolution with a 2x2 kernel [c_in, c_out, 2, 2].
void upsample2_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                       std::span<const double> bias, std::size_t c_out, std::span<double> y);
void upsample2_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                                  const MapDims& xd, std::size_t c_out, std::span<double> dx);
void upsample2_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                   const MapDims& xd, std::size_t c_out, std::span<double> dw,
                                   std::span<double> dbias);

// Affine map on rows: y[r] = W x[r] + b, W is [d_out, d_in].
void linear_forward(std::span<const double> x, std::size_t rows, std::size_t d_in,
                    std::span<const double> w, std::span<const double> bias, std::size_t d_out,
                    std::span<double> y);
void linear_backward_input_acc(std::span<const double> dy, std::size_t rows, std::size_t d_in,
                               std::span<const double> w, std::size_t d_out, std::span<double> dx);
void linear_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                std::size_t rows, std::size_t d_in, std::size_t d_out,
                                std::span<double> dw, std::span<double> dbias);

namespace reference {

void conv2d_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                    std::span<const double> bias, const ConvGeometry& g, std::span<double> y);
void conv2d_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                               const MapDims& xd, const ConvGeometry& g, std::span<double> dx);
void conv2d_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                const MapDims& xd, const ConvGeometry& g, std::span<double> dw,
                                std::span<double> dbias);
void avgpool2_forward(std::span<const double> x, const MapDims& xd, std::span<double> y);
void avgpool2_backward_acc(std::span<const double> dy, const MapDims& xd, std::span<double> dx);
void upsample2_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                       std::span<const double> bias, std::size_t c_out, std::span<double> y);
void upsample2_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                                  const MapDims& xd, std::size_t c_out, std::span<double> dx);
void upsample2_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                   const MapDims& xd, std::size_t c_out, std::span<double> dw,
                                   std::span<double> dbias);
void linear_forward(std::span<const double> x, std::size_t rows, std::size_t d_in,
                    std::span<const double> w, std::span<const double> bias, std::size_t d_out,
                    std::span<double> y);
void linear_backward_input_acc(std::span<const double> dy, std::size_t rows, std::size_t d_in,
                               std::span<const double> w, std::size_t d_out, std::span<double> dx);
void linear_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                std::size_t rows, std::size_t d_in, std::size_t d_out,
                                std::span<double> dw, std::span<double> dbias);

}  // namespace reference

}  // namespace mmdlstm::kernels
