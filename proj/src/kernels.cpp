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

#include "mmdlstm/kernels.hpp"

#include <algorithm>

namespace mmdlstm::kernels {

namespace {

using Index = std::ptrdiff_t;

// Valid output-time range [lo, hi) for kernel column j.
inline void time_range(Index out_t, Index in_t, Index pad, Index j, Index& lo, Index& hi) {
  lo = std::max<Index>(0, pad - j);
  hi = std::min<Index>(out_t, in_t + pad - j);
}

}  // namespace

void conv2d_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                    std::span<const double> bias, const ConvGeometry& g, std::span<double> y) {
  const Index N = xd.n, CI = xd.c, F = xd.f, T = xd.t;
  const Index CO = g.c_out, KH = g.kh, KW = g.kw, PF = g.pad_f, PT = g.pad_t;
  const Index FO = g.out_f(xd), TO = g.out_t(xd);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index n = 0; n < N; ++n) {
    for (Index co = 0; co < CO; ++co) {
      double* yp = y.data() + (n * CO + co) * FO * TO;
      std::fill(yp, yp + FO * TO, bias.empty() ? 0.0 : bias[co]);
      for (Index ci = 0; ci < CI; ++ci) {
        const double* xp = x.data() + (n * CI + ci) * F * T;
        const double* wp = w.data() + (co * CI + ci) * KH * KW;
        for (Index i = 0; i < KH; ++i) {
          for (Index j = 0; j < KW; ++j) {
            const double wv = wp[i * KW + j];
            Index lo, hi;
            time_range(TO, T, PT, j, lo, hi);
            for (Index fo = 0; fo < FO; ++fo) {
              const Index fi = fo + i - PF;
              if (fi < 0 || fi >= F) continue;
              double* yr = yp + fo * TO;
              const double* xr = xp + fi * T;
              const Index sh = j - PT;
              for (Index to = lo; to < hi; ++to) yr[to] += wv * xr[to + sh];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                               const MapDims& xd, const ConvGeometry& g, std::span<double> dx) {
  const Index N = xd.n, CI = xd.c, F = xd.f, T = xd.t;
  const Index CO = g.c_out, KH = g.kh, KW = g.kw, PF = g.pad_f, PT = g.pad_t;
  const Index FO = g.out_f(xd), TO = g.out_t(xd);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index n = 0; n < N; ++n) {
    for (Index ci = 0; ci < CI; ++ci) {
      double* dxp = dx.data() + (n * CI + ci) * F * T;
      for (Index co = 0; co < CO; ++co) {
        const double* dyp = dy.data() + (n * CO + co) * FO * TO;
        const double* wp = w.data() + (co * CI + ci) * KH * KW;
        for (Index i = 0; i < KH; ++i) {
          for (Index j = 0; j < KW; ++j) {
            const double wv = wp[i * KW + j];
            Index lo, hi;
            time_range(TO, T, PT, j, lo, hi);
            for (Index fo = 0; fo < FO; ++fo) {
              const Index fi = fo + i - PF;
              if (fi < 0 || fi >= F) continue;
              const double* dyr = dyp + fo * TO;
              double* dxr = dxp + fi * T;
              const Index sh = j - PT;
              for (Index to = lo; to < hi; ++to) dxr[to + sh] += wv * dyr[to];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                const MapDims& xd, const ConvGeometry& g, std::span<double> dw,
                                std::span<double> dbias) {
  const Index N = xd.n, CI = xd.c, F = xd.f, T = xd.t;
  const Index CO = g.c_out, KH = g.kh, KW = g.kw, PF = g.pad_f, PT = g.pad_t;
  const Index FO = g.out_f(xd), TO = g.out_t(xd);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index co = 0; co < CO; ++co) {
    for (Index ci = 0; ci < CI; ++ci) {
      double* dwp = dw.data() + (co * CI + ci) * KH * KW;
      for (Index i = 0; i < KH; ++i) {
        for (Index j = 0; j < KW; ++j) {
          Index lo, hi;
          time_range(TO, T, PT, j, lo, hi);
          double acc = 0.0;
          for (Index n = 0; n < N; ++n) {
            const double* dyp = dy.data() + (n * CO + co) * FO * TO;
            const double* xp = x.data() + (n * CI + ci) * F * T;
            for (Index fo = 0; fo < FO; ++fo) {
              const Index fi = fo + i - PF;
              if (fi < 0 || fi >= F) continue;
              const double* dyr = dyp + fo * TO;
              const double* xr = xp + fi * T;
              const Index sh = j - PT;
              for (Index to = lo; to < hi; ++to) acc += dyr[to] * xr[to + sh];
            }
          }
          dwp[i * KW + j] += acc;
        }
      }
    }
  }
  if (!dbias.empty()) {
#pragma omp parallel for schedule(static)
    for (Index co = 0; co < CO; ++co) {
      double acc = 0.0;
      for (Index n = 0; n < N; ++n) {
        const double* dyp = dy.data() + (n * CO + co) * FO * TO;
        for (Index k = 0; k < FO * TO; ++k) acc += dyp[k];
      }
      dbias[co] += acc;
    }
  }
}

void avgpool2_forward(std::span<const double> x, const MapDims& xd, std::span<double> y) {
  const Index planes = xd.n * xd.c, F = xd.f, T = xd.t, FO = F / 2, TO = T / 2;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    const double* xp = x.data() + p * F * T;
    double* yp = y.data() + p * FO * TO;
    for (Index f = 0; f < FO; ++f) {
      const double* r0 = xp + 2 * f * T;
      const double* r1 = r0 + T;
      for (Index t = 0; t < TO; ++t) {
        yp[f * TO + t] = 0.25 * (r0[2 * t] + r0[2 * t + 1] + r1[2 * t] + r1[2 * t + 1]);
      }
    }
  }
}

void avgpool2_backward_acc(std::span<const double> dy, const MapDims& xd, std::span<double> dx) {
  const Index planes = xd.n * xd.c, F = xd.f, T = xd.t, FO = F / 2, TO = T / 2;
#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    double* dxp = dx.data() + p * F * T;
    const double* dyp = dy.data() + p * FO * TO;
    for (Index f = 0; f < FO; ++f) {
      double* r0 = dxp + 2 * f * T;
      double* r1 = r0 + T;
      for (Index t = 0; t < TO; ++t) {
        const double g = 0.25 * dyp[f * TO + t];
        r0[2 * t] += g;
        r0[2 * t + 1] += g;
        r1[2 * t] += g;
        r1[2 * t + 1] += g;
      }
    }
  }
}

void upsample2_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                       std::span<const double> bias, std::size_t c_out, std::span<double> y) {
  const Index N = xd.n, CI = xd.c, F = xd.f, T = xd.t, CO = c_out, TO = 2 * T;
#pragma omp parallel for collapse(2) schedule(static)
  for (Index n = 0; n < N; ++n) {
    for (Index co = 0; co < CO; ++co) {
      double* yp = y.data() + (n * CO + co) * 4 * F * T;
      std::fill(yp, yp + 4 * F * T, bias.empty() ? 0.0 : bias[co]);
      for (Index ci = 0; ci < CI; ++ci) {
        const double* xp = x.data() + (n * CI + ci) * F * T;
        const double* wp = w.data() + (ci * CO + co) * 4;
        for (Index f = 0; f < F; ++f) {
          double* y0 = yp + 2 * f * TO;
          double* y1 = y0 + TO;
          const double* xr = xp + f * T;
          for (Index t = 0; t < T; ++t) {
            const double v = xr[t];
            y0[2 * t] += v * wp[0];
            y0[2 * t + 1] += v * wp[1];
            y1[2 * t] += v * wp[2];
            y1[2 * t + 1] += v * wp[3];
          }
        }
      }
    }
  }
}

void upsample2_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                                  const MapDims& xd, std::size_t c_out, std::span<double> dx) {
  const Index N = xd.n, CI = xd.c, F = xd.f, T = xd.t, CO = c_out, TO = 2 * T;
#pragma omp parallel for collapse(2) schedule(static)
  for (Index n = 0; n < N; ++n) {
    for (Index ci = 0; ci < CI; ++ci) {
      double* dxp = dx.data() + (n * CI + ci) * F * T;
      for (Index co = 0; co < CO; ++co) {
        const double* dyp = dy.data() + (n * CO + co) * 4 * F * T;
        const double* wp = w.data() + (ci * CO + co) * 4;
        for (Index f = 0; f < F; ++f) {
          const double* d0 = dyp + 2 * f * TO;
          const double* d1 = d0 + TO;
          double* dxr = dxp + f * T;
          for (Index t = 0; t < T; ++t) {
            dxr[t] += wp[0] * d0[2 * t] + wp[1] * d0[2 * t + 1] + wp[2] * d1[2 * t] +
                      wp[3] * d1[2 * t + 1];
          }
        }
      }
    }
  }
}

void upsample2_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                   const MapDims& xd, std::size_t c_out, std::span<double> dw,
                                   std::span<double> dbias) {
  const Index N = xd.n, CI = xd.c, F = xd.f, T = xd.t, CO = c_out, TO = 2 * T;
#pragma omp parallel for collapse(2) schedule(static)
  for (Index ci = 0; ci < CI; ++ci) {
    for (Index co = 0; co < CO; ++co) {
      double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
      for (Index n = 0; n < N; ++n) {
        const double* xp = x.data() + (n * CI + ci) * F * T;
        const double* dyp = dy.data() + (n * CO + co) * 4 * F * T;
        for (Index f = 0; f < F; ++f) {
          const double* d0 = dyp + 2 * f * TO;
          const double* d1 = d0 + TO;
          const double* xr = xp + f * T;
          for (Index t = 0; t < T; ++t) {
            a0 += xr[t] * d0[2 * t];
            a1 += xr[t] * d0[2 * t + 1];
            a2 += xr[t] * d1[2 * t];
            a3 += xr[t] * d1[2 * t + 1];
          }
        }
      }
      double* dwp = dw.data() + (ci * CO + co) * 4;
      dwp[0] += a0;
      dwp[1] += a1;
      dwp[2] += a2;
      dwp[3] += a3;
    }
  }
  if (!dbias.empty()) {
#pragma omp parallel for schedule(static)
    for (Index co = 0; co < CO; ++co) {
      double acc = 0.0;
      for (Index n = 0; n < N; ++n) {
        const double* dyp = dy.data() + (n * CO + co) * 4 * F * T;
        for (Index k = 0; k < 4 * F * T; ++k) acc += dyp[k];
      }
      dbias[co] += acc;
    }
  }
}

void linear_forward(std::span<const double> x, std::size_t rows, std::size_t d_in,
                    std::span<const double> w, std::span<const double> bias, std::size_t d_out,
                    std::span<double> y) {
  const Index R = rows, DI = d_in, DO = d_out;
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < R; ++r) {
    const double* xr = x.data() + r * DI;
    double* yr = y.data() + r * DO;
    for (Index o = 0; o < DO; ++o) {
      const double* wr = w.data() + o * DI;
      double acc = bias.empty() ? 0.0 : bias[o];
      for (Index i = 0; i < DI; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
}

void linear_backward_input_acc(std::span<const double> dy, std::size_t rows, std::size_t d_in,
                               std::span<const double> w, std::size_t d_out, std::span<double> dx) {
  const Index R = rows, DI = d_in, DO = d_out;
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < R; ++r) {
    const double* dyr = dy.data() + r * DO;
    double* dxr = dx.data() + r * DI;
    for (Index o = 0; o < DO; ++o) {
      const double g = dyr[o];
      const double* wr = w.data() + o * DI;
      for (Index i = 0; i < DI; ++i) dxr[i] += g * wr[i];
    }
  }
}

void linear_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                std::size_t rows, std::size_t d_in, std::size_t d_out,
                                std::span<double> dw, std::span<double> dbias) {
  const Index R = rows, DI = d_in, DO = d_out;
#pragma omp parallel for schedule(static)
  for (Index o = 0; o < DO; ++o) {
    double* dwr = dw.data() + o * DI;
    double db = 0.0;
    for (Index r = 0; r < R; ++r) {
      const double g = dy[r * DO + o];
      db += g;
      const double* xr = x.data() + r * DI;
      for (Index i = 0; i < DI; ++i) dwr[i] += g * xr[i];
    }
    if (!dbias.empty()) dbias[o] += db;
  }
}

// ---------------------------------------------------------------------------
// Serial reference loops. One output element at a time, bounds checked.

namespace reference {

void conv2d_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                    std::span<const double> bias, const ConvGeometry& g, std::span<double> y) {
  const Index FO = g.out_f(xd), TO = g.out_t(xd);
  for (Index n = 0; n < Index(xd.n); ++n)
    for (Index co = 0; co < Index(g.c_out); ++co)
      for (Index fo = 0; fo < FO; ++fo)
        for (Index to = 0; to < TO; ++to) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (Index ci = 0; ci < Index(xd.c); ++ci)
            for (Index i = 0; i < Index(g.kh); ++i)
              for (Index j = 0; j < Index(g.kw); ++j) {
                const Index fi = fo + i - Index(g.pad_f), ti = to + j - Index(g.pad_t);
                if (fi < 0 || ti < 0 || fi >= Index(xd.f) || ti >= Index(xd.t)) continue;
                acc += w[((co * xd.c + ci) * g.kh + i) * g.kw + j] *
                       x[((n * xd.c + ci) * xd.f + fi) * xd.t + ti];
              }
          y[((n * g.c_out + co) * FO + fo) * TO + to] = acc;
        }
}

void conv2d_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                               const MapDims& xd, const ConvGeometry& g, std::span<double> dx) {
  const Index FO = g.out_f(xd), TO = g.out_t(xd);
  for (Index n = 0; n < Index(xd.n); ++n)
    for (Index co = 0; co < Index(g.c_out); ++co)
      for (Index fo = 0; fo < FO; ++fo)
        for (Index to = 0; to < TO; ++to) {
          const double gy = dy[((n * g.c_out + co) * FO + fo) * TO + to];
          for (Index ci = 0; ci < Index(xd.c); ++ci)
            for (Index i = 0; i < Index(g.kh); ++i)
              for (Index j = 0; j < Index(g.kw); ++j) {
                const Index fi = fo + i - Index(g.pad_f), ti = to + j - Index(g.pad_t);
                if (fi < 0 || ti < 0 || fi >= Index(xd.f) || ti >= Index(xd.t)) continue;
                dx[((n * xd.c + ci) * xd.f + fi) * xd.t + ti] +=
                    gy * w[((co * xd.c + ci) * g.kh + i) * g.kw + j];
              }
        }
}

void conv2d_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                const MapDims& xd, const ConvGeometry& g, std::span<double> dw,
                                std::span<double> dbias) {
  const Index FO = g.out_f(xd), TO = g.out_t(xd);
  for (Index n = 0; n < Index(xd.n); ++n)
    for (Index co = 0; co < Index(g.c_out); ++co)
      for (Index fo = 0; fo < FO; ++fo)
        for (Index to = 0; to < TO; ++to) {
          const double gy = dy[((n * g.c_out + co) * FO + fo) * TO + to];
          if (!dbias.empty()) dbias[co] += gy;
          for (Index ci = 0; ci < Index(xd.c); ++ci)
            for (Index i = 0; i < Index(g.kh); ++i)
              for (Index j = 0; j < Index(g.kw); ++j) {
                const Index fi = fo + i - Index(g.pad_f), ti = to + j - Index(g.pad_t);
                if (fi < 0 || ti < 0 || fi >= Index(xd.f) || ti >= Index(xd.t)) continue;
                dw[((co * xd.c + ci) * g.kh + i) * g.kw + j] +=
                    gy * x[((n * xd.c + ci) * xd.f + fi) * xd.t + ti];
              }
        }
}

void avgpool2_forward(std::span<const double> x, const MapDims& xd, std::span<double> y) {
  const std::size_t FO = xd.f / 2, TO = xd.t / 2;
  for (std::size_t p = 0; p < xd.n * xd.c; ++p)
    for (std::size_t f = 0; f < FO; ++f)
      for (std::size_t t = 0; t < TO; ++t) {
        double acc = 0.0;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b) acc += x[(p * xd.f + 2 * f + a) * xd.t + 2 * t + b];
        y[(p * FO + f) * TO + t] = acc / 4.0;
      }
}

void avgpool2_backward_acc(std::span<const double> dy, const MapDims& xd, std::span<double> dx) {
  const std::size_t FO = xd.f / 2, TO = xd.t / 2;
  for (std::size_t p = 0; p < xd.n * xd.c; ++p)
    for (std::size_t f = 0; f < xd.f; ++f)
      for (std::size_t t = 0; t < xd.t; ++t)
        dx[(p * xd.f + f) * xd.t + t] += dy[(p * FO + f / 2) * TO + t / 2] / 4.0;
}

void upsample2_forward(std::span<const double> x, const MapDims& xd, std::span<const double> w,
                       std::span<const double> bias, std::size_t c_out, std::span<double> y) {
  const std::size_t FO = 2 * xd.f, TO = 2 * xd.t;
  for (std::size_t n = 0; n < xd.n; ++n)
    for (std::size_t co = 0; co < c_out; ++co)
      for (std::size_t fo = 0; fo < FO; ++fo)
        for (std::size_t to = 0; to < TO; ++to) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (std::size_t ci = 0; ci < xd.c; ++ci)
            acc += x[((n * xd.c + ci) * xd.f + fo / 2) * xd.t + to / 2] *
                   w[((ci * c_out + co) * 2 + fo % 2) * 2 + to % 2];
          y[((n * c_out + co) * FO + fo) * TO + to] = acc;
        }
}

void upsample2_backward_input_acc(std::span<const double> dy, std::span<const double> w,
                                  const MapDims& xd, std::size_t c_out, std::span<double> dx) {
  const std::size_t FO = 2 * xd.f, TO = 2 * xd.t;
  for (std::size_t n = 0; n < xd.n; ++n)
    for (std::size_t co = 0; co < c_out; ++co)
      for (std::size_t fo = 0; fo < FO; ++fo)
        for (std::size_t to = 0; to < TO; ++to) {
          const double gy = dy[((n * c_out + co) * FO + fo) * TO + to];
          for (std::size_t ci = 0; ci < xd.c; ++ci)
            dx[((n * xd.c + ci) * xd.f + fo / 2) * xd.t + to / 2] +=
                gy * w[((ci * c_out + co) * 2 + fo % 2) * 2 + to % 2];
        }
}

void upsample2_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                   const MapDims& xd, std::size_t c_out, std::span<double> dw,
                                   std::span<double> dbias) {
  const std::size_t FO = 2 * xd.f, TO = 2 * xd.t;
  for (std::size_t n = 0; n < xd.n; ++n)
    for (std::size_t co = 0; co < c_out; ++co)
      for (std::size_t fo = 0; fo < FO; ++fo)
        for (std::size_t to = 0; to < TO; ++to) {
          const double gy = dy[((n * c_out + co) * FO + fo) * TO + to];
          if (!dbias.empty()) dbias[co] += gy;
          for (std::size_t ci = 0; ci < xd.c; ++ci)
            dw[((ci * c_out + co) * 2 + fo % 2) * 2 + to % 2] +=
                gy * x[((n * xd.c + ci) * xd.f + fo / 2) * xd.t + to / 2];
        }
}

void linear_forward(std::span<const double> x, std::size_t rows, std::size_t d_in,
                    std::span<const double> w, std::span<const double> bias, std::size_t d_out,
                    std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < d_out; ++o) {
      double acc = bias.empty() ? 0.0 : bias[o];
      for (std::size_t i = 0; i < d_in; ++i) acc += w[o * d_in + i] * x[r * d_in + i];
      y[r * d_out + o] = acc;
    }
}

void linear_backward_input_acc(std::span<const double> dy, std::size_t rows, std::size_t d_in,
                               std::span<const double> w, std::size_t d_out, std::span<double> dx) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < d_in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d_out; ++o) acc += dy[r * d_out + o] * w[o * d_in + i];
      dx[r * d_in + i] += acc;
    }
}

void linear_backward_weight_acc(std::span<const double> dy, std::span<const double> x,
                                std::size_t rows, std::size_t d_in, std::size_t d_out,
                                std::span<double> dw, std::span<double> dbias) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < d_out; ++o) {
      if (!dbias.empty()) dbias[o] += dy[r * d_out + o];
      for (std::size_t i = 0; i < d_in; ++i) dw[o * d_in + i] += dy[r * d_out + o] * x[r * d_in + i];
    }
}

}  // namespace reference

}  // namespace mmdlstm::kernels
