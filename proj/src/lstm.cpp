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

#include "mmdlstm/lstm.hpp"

#include <cmath>
#include <vector>

#include "mmdlstm/error.hpp"

namespace mmdlstm::ops {

namespace {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Activations saved by the forward sweep of one direction for one sequence.
struct Trace {
  std::vector<double> gates;  // [T, 4m] post-activation i, f, g, o
  std::vector<double> cell;   // [T, m]
  std::vector<double> hidden;  // [T, m]
};

void check_direction(const LstmDirection& dir, std::size_t d) {
  const std::size_t m = dir.units();
  const auto& wi = dir.w_input.value();
  const auto& wh = dir.w_recurrent.value();
  if (wi.rank() != 2 || wi.dim(0) != 4 * m || wi.dim(1) != d || wh.rank() != 2 ||
      wh.dim(0) != 4 * m || dir.bias.value().size() != 4 * m) {
    throw ConfigError("bilstm: weight shapes do not match input size " + std::to_string(d));
  }
}

// Runs one direction over sequence x (T rows of d), visiting steps in
// `order`. Writes h into out at column offset `col` of a 2m-wide row.
Trace run_direction(const double* x, std::size_t T, std::size_t d, const LstmDirection& dir,
                    bool reversed, double* out, std::size_t out_width, std::size_t col) {
  const std::size_t m = dir.units();
  const auto& wi = dir.w_input.value();
  const auto& wh = dir.w_recurrent.value();
  const auto& b = dir.bias.value();
  Trace tr;
  tr.gates.assign(T * 4 * m, 0.0);
  tr.cell.assign(T * m, 0.0);
  tr.hidden.assign(T * m, 0.0);
  std::vector<double> a(4 * m);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reversed ? T - 1 - s : s;
    const double* xt = x + t * d;
    const double* h_prev = s ? tr.hidden.data() + (s - 1) * m : nullptr;
    const double* c_prev = s ? tr.cell.data() + (s - 1) * m : nullptr;
    for (std::size_t r = 0; r < 4 * m; ++r) {
      double acc = b[r];
      const double* wir = wi.data().data() + r * d;
      for (std::size_t k = 0; k < d; ++k) acc += wir[k] * xt[k];
      if (h_prev) {
        const double* whr = wh.data().data() + r * m;
        for (std::size_t k = 0; k < m; ++k) acc += whr[k] * h_prev[k];
      }
      a[r] = acc;
    }
    double* g = tr.gates.data() + s * 4 * m;
    double* c = tr.cell.data() + s * m;
    double* h = tr.hidden.data() + s * m;
    for (std::size_t u = 0; u < m; ++u) {
      const double ig = sigmoid(a[u]);
      const double fg = sigmoid(a[m + u]);
      const double cg = std::tanh(a[2 * m + u]);
      const double og = sigmoid(a[3 * m + u]);
      g[u] = ig;
      g[m + u] = fg;
      g[2 * m + u] = cg;
      g[3 * m + u] = og;
      c[u] = fg * (c_prev ? c_prev[u] : 0.0) + ig * cg;
      h[u] = og * std::tanh(c[u]);
      out[t * out_width + col + u] = h[u];
    }
  }
  return tr;
}

struct DirGrads {
  Tensor* w_input;
  Tensor* w_recurrent;
  Tensor* bias;
};

void backprop_direction(const double* x, std::size_t T, std::size_t d, const LstmDirection& dir,
                        bool reversed, const Trace& tr, const double* dout,
                        std::size_t out_width, std::size_t col, double* dx,
                        const DirGrads& grads) {
  const std::size_t m = dir.units();
  const auto& wi = dir.w_input.value();
  const auto& wh = dir.w_recurrent.value();
  std::vector<double> dh_next(m, 0.0), dc_next(m, 0.0), da(4 * m), dh(m);
  for (std::size_t s = T; s-- > 0;) {
    const std::size_t t = reversed ? T - 1 - s : s;
    const double* g = tr.gates.data() + s * 4 * m;
    const double* c = tr.cell.data() + s * m;
    const double* c_prev = s ? tr.cell.data() + (s - 1) * m : nullptr;
    const double* h_prev = s ? tr.hidden.data() + (s - 1) * m : nullptr;
    for (std::size_t u = 0; u < m; ++u) {
      dh[u] = dout[t * out_width + col + u] + dh_next[u];
      const double ig = g[u], fg = g[m + u], cg = g[2 * m + u], og = g[3 * m + u];
      const double tc = std::tanh(c[u]);
      const double dc = dh[u] * og * (1.0 - tc * tc) + dc_next[u];
      da[u] = dc * cg * ig * (1.0 - ig);
      da[m + u] = dc * (c_prev ? c_prev[u] : 0.0) * fg * (1.0 - fg);
      da[2 * m + u] = dc * ig * (1.0 - cg * cg);
      da[3 * m + u] = dh[u] * tc * og * (1.0 - og);
      dc_next[u] = dc * fg;
    }
    const double* xt = x + t * d;
    for (std::size_t r = 0; r < 4 * m; ++r) {
      const double v = da[r];
      if (grads.bias) (*grads.bias)[r] += v;
      if (grads.w_input) {
        double* row = grads.w_input->data().data() + r * d;
        for (std::size_t k = 0; k < d; ++k) row[k] += v * xt[k];
      }
      if (grads.w_recurrent && h_prev) {
        double* row = grads.w_recurrent->data().data() + r * m;
        for (std::size_t k = 0; k < m; ++k) row[k] += v * h_prev[k];
      }
    }
    if (dx) {
      double* dxt = dx + t * d;
      for (std::size_t r = 0; r < 4 * m; ++r) {
        const double* wir = wi.data().data() + r * d;
        for (std::size_t k = 0; k < d; ++k) dxt[k] += da[r] * wir[k];
      }
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    if (s > 0) {
      for (std::size_t r = 0; r < 4 * m; ++r) {
        const double* whr = wh.data().data() + r * m;
        for (std::size_t k = 0; k < m; ++k) dh_next[k] += da[r] * whr[k];
      }
    }
  }
}

Tensor* grad_of(Node& self, std::size_t i) {
  Node& in = *self.inputs.at(i);
  return in.requires_grad ? &in.ensure_grad() : nullptr;
}

}  // namespace

Var bilstm(const Var& x, const LstmDirection& fwd, const LstmDirection& bwd) {
  const Tensor& xv = x.value();
  if (xv.rank() != 3) throw ConfigError("bilstm: expected [n,T,d], got " + shape_string(xv.shape()));
  const std::size_t N = xv.dim(0), T = xv.dim(1), d = xv.dim(2);
  if (T == 0) throw PreconditionError("bilstm: empty sequence");
  check_direction(fwd, d);
  check_direction(bwd, d);
  if (fwd.units() != bwd.units()) throw ConfigError("bilstm: direction sizes differ");
  const std::size_t m = fwd.units();

  Tensor y({N, T, 2 * m});
  std::vector<Trace> traces;
  traces.reserve(2 * N);
  for (std::size_t n = 0; n < N; ++n) {
    const double* xs = xv.data().data() + n * T * d;
    double* ys = y.data().data() + n * T * 2 * m;
    traces.push_back(run_direction(xs, T, d, fwd, false, ys, 2 * m, 0));
    traces.push_back(run_direction(xs, T, d, bwd, true, ys, 2 * m, m));
  }

  std::vector<Var> inputs{x,           fwd.w_input, fwd.w_recurrent, fwd.bias,
                          bwd.w_input, bwd.w_recurrent, bwd.bias};
  return make_node(
      "bilstm", std::move(y), inputs,
      [N, T, d, m, fwd, bwd, traces = std::move(traces)](Node& self) {
        const Tensor& xv = self.inputs[0]->value;
        Tensor* dx = grad_of(self, 0);
        const DirGrads gf{grad_of(self, 1), grad_of(self, 2), grad_of(self, 3)};
        const DirGrads gb{grad_of(self, 4), grad_of(self, 5), grad_of(self, 6)};
        for (std::size_t n = 0; n < N; ++n) {
          const double* xs = xv.data().data() + n * T * d;
          const double* dys = self.grad.data().data() + n * T * 2 * m;
          double* dxs = dx ? dx->data().data() + n * T * d : nullptr;
          backprop_direction(xs, T, d, fwd, false, traces[2 * n], dys, 2 * m, 0, dxs, gf);
          backprop_direction(xs, T, d, bwd, true, traces[2 * n + 1], dys, 2 * m, m, dxs, gb);
        }
      });
}

}  // namespace mmdlstm::ops
