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

// Independent brute-force reference computations used by the tests. None of
// these call into the library's kernels.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mmdlstm/tensor.hpp"

namespace oracle {

using mmdlstm::Shape;
using mmdlstm::Tensor;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline double rel_error(const Tensor& got, const Tensor& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num = std::max(num, std::abs(got[i] - want[i]));
    den = std::max(den, std::abs(want[i]));
  }
  return den > 0.0 ? num / den : num;
}

// Direct cross-correlation, zero padding pf/pt on each side.
inline Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& b, std::size_t pf,
                     std::size_t pt) {
  const std::size_t n = x.dim(0), ci = x.dim(1), F = x.dim(2), T = x.dim(3);
  const std::size_t co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t of = F + 2 * pf + 1 - kh, ot = T + 2 * pt + 1 - kw;
  Tensor y({n, co, of, ot});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t i = 0; i < of; ++i)
        for (std::size_t j = 0; j < ot; ++j) {
          double acc = b.empty() ? 0.0 : b[o];
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t a = 0; a < kh; ++a)
              for (std::size_t d = 0; d < kw; ++d) {
                const long fi = static_cast<long>(i + a) - static_cast<long>(pf);
                const long tj = static_cast<long>(j + d) - static_cast<long>(pt);
                if (fi < 0 || tj < 0 || fi >= static_cast<long>(F) || tj >= static_cast<long>(T)) continue;
                acc += k.at({o, c, a, d}) * x.at({s, c, std::size_t(fi), std::size_t(tj)});
              }
          y.at({s, o, i, j}) = acc;
        }
  return y;
}

inline Tensor avgpool2(const Tensor& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), F = x.dim(2) / 2, T = x.dim(3) / 2;
  Tensor y({n, c, F, T});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < F; ++i)
        for (std::size_t j = 0; j < T; ++j)
          y.at({s, ch, i, j}) = 0.25 * (x.at({s, ch, 2 * i, 2 * j}) + x.at({s, ch, 2 * i + 1, 2 * j}) +
                                        x.at({s, ch, 2 * i, 2 * j + 1}) +
                                        x.at({s, ch, 2 * i + 1, 2 * j + 1}));
  return y;
}

// Transposed conv, stride 2, kernel [c_in, c_out, 2, 2], by scattering.
inline Tensor upsample2(const Tensor& x, const Tensor& k, const Tensor& b) {
  const std::size_t n = x.dim(0), ci = x.dim(1), F = x.dim(2), T = x.dim(3), co = k.dim(1);
  Tensor y({n, co, 2 * F, 2 * T});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t i = 0; i < 2 * F; ++i)
        for (std::size_t j = 0; j < 2 * T; ++j) y.at({s, o, i, j}) = b.empty() ? 0.0 : b[o];
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < ci; ++c)
      for (std::size_t i = 0; i < F; ++i)
        for (std::size_t j = 0; j < T; ++j)
          for (std::size_t o = 0; o < co; ++o)
            for (std::size_t a = 0; a < 2; ++a)
              for (std::size_t d = 0; d < 2; ++d)
                y.at({s, o, 2 * i + a, 2 * j + d}) += k.at({c, o, a, d}) * x.at({s, c, i, j});
  return y;
}

// Stride-2 2x2 convolution with the same kernel: the adjoint of upsample2.
inline Tensor stride2_conv(const Tensor& y, const Tensor& k) {
  const std::size_t n = y.dim(0), co = y.dim(1), F = y.dim(2) / 2, T = y.dim(3) / 2, ci = k.dim(0);
  Tensor z({n, ci, F, T});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < ci; ++c)
      for (std::size_t i = 0; i < F; ++i)
        for (std::size_t j = 0; j < T; ++j) {
          double acc = 0.0;
          for (std::size_t o = 0; o < co; ++o)
            for (std::size_t a = 0; a < 2; ++a)
              for (std::size_t d = 0; d < 2; ++d)
                acc += k.at({c, o, a, d}) * y.at({s, o, 2 * i + a, 2 * j + d});
          z.at({s, c, i, j}) = acc;
        }
  return z;
}

// Rows of x [.., d_in] times W^T plus b.
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t d_in = w.dim(1), d_out = w.dim(0), rows = x.size() / d_in;
  Shape s = x.shape();
  s.back() = d_out;
  Tensor y(s);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < d_out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t i = 0; i < d_in; ++i) acc += w[o * d_in + i] * x[r * d_in + i];
      y[r * d_out + o] = acc;
    }
  return y;
}

// Per-bin index of the largest source, first one on ties.
inline std::vector<std::size_t> argmax_sources(const std::vector<Tensor>& s) {
  std::vector<std::size_t> out(s.front().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t best = 0;
    double v = s[0][i];
    for (std::size_t j = 1; j < s.size(); ++j) {
      if (s[j][i] > v) {
        v = s[j][i];
        best = j;
      }
    }
    out[i] = best;
  }
  return out;
}

inline double inner(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// One LSTM direction by the textbook recurrences, x [T, d], gates i f g o.
inline std::vector<std::vector<double>> lstm_direction(const std::vector<std::vector<double>>& x,
                                                       const Tensor& wi, const Tensor& wr,
                                                       const Tensor& b) {
  const std::size_t m = wr.dim(1), d = wi.dim(1);
  std::vector<double> h(m, 0.0), c(m, 0.0);
  std::vector<std::vector<double>> out;
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (const auto& xt : x) {
    std::vector<double> z(4 * m);
    for (std::size_t r = 0; r < 4 * m; ++r) {
      double acc = b[r];
      for (std::size_t i = 0; i < d; ++i) acc += wi[r * d + i] * xt[i];
      for (std::size_t i = 0; i < m; ++i) acc += wr[r * m + i] * h[i];
      z[r] = acc;
    }
    for (std::size_t u = 0; u < m; ++u) {
      const double ig = sig(z[u]), fg = sig(z[m + u]), gg = std::tanh(z[2 * m + u]),
                   og = sig(z[3 * m + u]);
      c[u] = fg * c[u] + ig * gg;
      h[u] = og * std::tanh(c[u]);
    }
    out.push_back(h);
  }
  return out;
}

}  // namespace oracle
