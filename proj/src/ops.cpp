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

#include "mmdlstm/ops.hpp"

#include <cmath>

#include "mmdlstm/error.hpp"
#include "mmdlstm/kernels.hpp"

namespace mmdlstm::ops {

namespace {

using kernels::MapDims;

// Gradient buffer of input i, or nullptr when it takes no gradient.
Tensor* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs.at(i);
  return in.requires_grad ? &in.ensure_grad() : nullptr;
}

const Tensor& input_value(const Node& self, std::size_t i) { return self.inputs.at(i)->value; }

MapDims map_dims(const Tensor& x, const char* op) {
  if (x.rank() != 4) {
    throw ConfigError(std::string(op) + ": expected [n,c,f,t], got " + shape_string(x.shape()));
  }
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
}

bool has(const Var& v) { return static_cast<bool>(v) && !v.value().empty(); }

std::span<const double> data_or_empty(const Var& v) {
  return has(v) ? v.value().data() : std::span<const double>{};
}

std::vector<Var> present(std::initializer_list<Var> vs) {
  std::vector<Var> out;
  for (const auto& v : vs) {
    if (v) out.push_back(v);
  }
  return out;
}

}  // namespace

Var conv2d(const Var& x, const Var& kernel, const Var& bias, Padding padding) {
  const MapDims xd = map_dims(x.value(), "conv2d");
  const Tensor& w = kernel.value();
  if (w.rank() != 4 || w.dim(1) != xd.c) {
    throw ConfigError("conv2d: kernel " + shape_string(w.shape()) + " does not match input " +
                      shape_string(x.shape()));
  }
  kernels::ConvGeometry g{w.dim(0), w.dim(2), w.dim(3), 0, 0};
  if (padding == Padding::kSame) {
    if (g.kh % 2 == 0 || g.kw % 2 == 0) {
      throw ConfigError("conv2d: same padding needs odd kernel extents");
    }
    g.pad_f = g.kh / 2;
    g.pad_t = g.kw / 2;
  } else if (xd.f < g.kh || xd.t < g.kw) {
    throw ConfigError("conv2d: valid padding with kernel larger than input");
  }
  if (has(bias) && bias.value().size() != g.c_out) throw ConfigError("conv2d: bias size mismatch");

  Tensor y({xd.n, g.c_out, g.out_f(xd), g.out_t(xd)});
  kernels::conv2d_forward(x.value().data(), xd, w.data(), data_or_empty(bias), g, y.data());
  const bool with_bias = has(bias);
  return make_node("conv2d", std::move(y), present({x, kernel, bias}),
                   [xd, g, with_bias](Node& self) {
                     const auto& dy = self.grad.data();
                     if (Tensor* dx = input_grad(self, 0)) {
                       kernels::conv2d_backward_input_acc(dy, input_value(self, 1).data(), xd, g,
                                                          dx->data());
                     }
                     Tensor* dw = input_grad(self, 1);
                     Tensor* db = with_bias ? input_grad(self, 2) : nullptr;
                     if (dw || db) {
                       Tensor scratch_w;
                       if (!dw) {
                         scratch_w = Tensor(input_value(self, 1).shape());
                         dw = &scratch_w;
                       }
                       kernels::conv2d_backward_weight_acc(
                           dy, input_value(self, 0).data(), xd, g, dw->data(),
                           db ? db->data() : std::span<double>{});
                     }
                   });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, RunningStats* running,
               double eps, BnMode mode) {
  if (!(eps > 0.0)) throw PreconditionError("batch_norm: eps must be positive");
  const MapDims xd = map_dims(x.value(), "batch_norm");
  const std::size_t plane = xd.f * xd.t;
  const std::size_t count = xd.n * plane;
  if (count == 0) throw ConfigError("batch_norm: zero-size channel plane");
  if (gamma.value().size() != xd.c || beta.value().size() != xd.c) {
    throw ConfigError("batch_norm: affine parameter size mismatch");
  }
  if (running && (!running->mean || !running->var || running->mean->size() != xd.c ||
                  running->var->size() != xd.c)) {
    throw ConfigError("batch_norm: running statistics size mismatch");
  }
  if (mode == BnMode::kEval && !running) {
    throw PreconditionError("batch_norm: eval mode needs running statistics");
  }

  const auto& xv = x.value();
  std::vector<double> mu(xd.c), inv_std(xd.c);
  for (std::size_t c = 0; c < xd.c; ++c) {
    if (mode == BnMode::kEval) {
      mu[c] = (*running->mean)[c];
      inv_std[c] = 1.0 / std::sqrt((*running->var)[c] + eps);
      continue;
    }
    double s = 0.0;
    for (std::size_t n = 0; n < xd.n; ++n) {
      const double* p = xv.data().data() + (n * xd.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) s += p[k];
    }
    const double m = s / double(count);
    double ss = 0.0;
    for (std::size_t n = 0; n < xd.n; ++n) {
      const double* p = xv.data().data() + (n * xd.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) ss += (p[k] - m) * (p[k] - m);
    }
    const double var = ss / double(count);
    mu[c] = m;
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    if (running) {
      const double unbiased = count > 1 ? ss / double(count - 1) : var;
      Tensor& rm = *running->mean;
      Tensor& rv = *running->var;
      rm[c] = (1.0 - running->momentum) * rm[c] + running->momentum * m;
      rv[c] = (1.0 - running->momentum) * rv[c] + running->momentum * unbiased;
    }
  }

  Tensor xhat(xv.shape());
  Tensor y(xv.shape());
  for (std::size_t n = 0; n < xd.n; ++n) {
    for (std::size_t c = 0; c < xd.c; ++c) {
      const std::size_t off = (n * xd.c + c) * plane;
      const double gmm = gamma.value()[c], bt = beta.value()[c];
      for (std::size_t k = 0; k < plane; ++k) {
        const double h = (xv[off + k] - mu[c]) * inv_std[c];
        xhat[off + k] = h;
        y[off + k] = gmm * h + bt;
      }
    }
  }

  return make_node(
      "batch_norm", std::move(y), {x, gamma, beta},
      [xd, plane, count, mode, inv_std = std::move(inv_std),
       xhat = std::move(xhat)](Node& self) {
        const Tensor& dy = self.grad;
        const Tensor& gmm = input_value(self, 1);
        Tensor* dx = input_grad(self, 0);
        Tensor* dg = input_grad(self, 1);
        Tensor* db = input_grad(self, 2);
        for (std::size_t c = 0; c < xd.c; ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t n = 0; n < xd.n; ++n) {
            const std::size_t off = (n * xd.c + c) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
              sum_dy += dy[off + k];
              sum_dy_xhat += dy[off + k] * xhat[off + k];
            }
          }
          if (dg) (*dg)[c] += sum_dy_xhat;
          if (db) (*db)[c] += sum_dy;
          if (!dx) continue;
          const double a = gmm[c] * inv_std[c];
          const double mean_dy = sum_dy / double(count);
          const double mean_dy_xhat = sum_dy_xhat / double(count);
          for (std::size_t n = 0; n < xd.n; ++n) {
            const std::size_t off = (n * xd.c + c) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
              if (mode == BnMode::kTrain) {
                (*dx)[off + k] += a * (dy[off + k] - mean_dy - xhat[off + k] * mean_dy_xhat);
              } else {
                (*dx)[off + k] += a * dy[off + k];
              }
            }
          }
        }
      });
}

Var relu(const Var& x) {
  Tensor y(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_node("relu", std::move(y), {x}, [](Node& self) {
    Tensor* dx = input_grad(self, 0);
    if (!dx) return;
    const Tensor& xv = input_value(self, 0);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > 0.0) (*dx)[i] += self.grad[i];
    }
  });
}

Var downsample2(const Var& x) {
  const MapDims xd = map_dims(x.value(), "downsample2");
  if (xd.f % 2 != 0 || xd.t % 2 != 0) {
    throw PreconditionError("downsample2: odd spatial extent " + shape_string(x.shape()) +
                            " (pad before pooling)");
  }
  Tensor y({xd.n, xd.c, xd.f / 2, xd.t / 2});
  kernels::avgpool2_forward(x.value().data(), xd, y.data());
  return make_node("downsample2", std::move(y), {x}, [xd](Node& self) {
    if (Tensor* dx = input_grad(self, 0)) {
      kernels::avgpool2_backward_acc(self.grad.data(), xd, dx->data());
    }
  });
}

Var upsample2(const Var& x, const Var& kernel, const Var& bias) {
  const MapDims xd = map_dims(x.value(), "upsample2");
  const Tensor& w = kernel.value();
  if (w.rank() != 4 || w.dim(0) != xd.c || w.dim(2) != 2 || w.dim(3) != 2) {
    throw ConfigError("upsample2: kernel " + shape_string(w.shape()) + " does not match input " +
                      shape_string(x.shape()));
  }
  const std::size_t c_out = w.dim(1);
  if (has(bias) && bias.value().size() != c_out) throw ConfigError("upsample2: bias size mismatch");
  Tensor y({xd.n, c_out, 2 * xd.f, 2 * xd.t});
  kernels::upsample2_forward(x.value().data(), xd, w.data(), data_or_empty(bias), c_out, y.data());
  const bool with_bias = has(bias);
  return make_node("upsample2", std::move(y), present({x, kernel, bias}),
                   [xd, c_out, with_bias](Node& self) {
                     const auto& dy = self.grad.data();
                     if (Tensor* dx = input_grad(self, 0)) {
                       kernels::upsample2_backward_input_acc(dy, input_value(self, 1).data(), xd,
                                                             c_out, dx->data());
                     }
                     Tensor* dw = input_grad(self, 1);
                     Tensor* db = with_bias ? input_grad(self, 2) : nullptr;
                     if (dw || db) {
                       Tensor scratch_w;
                       if (!dw) {
                         scratch_w = Tensor(input_value(self, 1).shape());
                         dw = &scratch_w;
                       }
                       kernels::upsample2_backward_weight_acc(
                           dy, input_value(self, 0).data(), xd, c_out, dw->data(),
                           db ? db->data() : std::span<double>{});
                     }
                   });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& w = weight.value();
  if (xv.rank() < 1 || w.rank() != 2 || w.dim(1) != xv.shape().back()) {
    throw ConfigError("linear: weight " + shape_string(w.shape()) + " does not match input " +
                      shape_string(xv.shape()));
  }
  const std::size_t d_in = w.dim(1), d_out = w.dim(0);
  if (has(bias) && bias.value().size() != d_out) throw ConfigError("linear: bias size mismatch");
  const std::size_t rows = xv.size() / d_in;
  Shape out_shape = xv.shape();
  out_shape.back() = d_out;
  Tensor y(out_shape);
  kernels::linear_forward(xv.data(), rows, d_in, w.data(), data_or_empty(bias), d_out, y.data());
  const bool with_bias = has(bias);
  return make_node("linear", std::move(y), present({x, weight, bias}),
                   [rows, d_in, d_out, with_bias](Node& self) {
                     const auto& dy = self.grad.data();
                     if (Tensor* dx = input_grad(self, 0)) {
                       kernels::linear_backward_input_acc(dy, rows, d_in,
                                                          input_value(self, 1).data(), d_out,
                                                          dx->data());
                     }
                     Tensor* dw = input_grad(self, 1);
                     Tensor* db = with_bias ? input_grad(self, 2) : nullptr;
                     if (dw || db) {
                       Tensor scratch_w;
                       if (!dw) {
                         scratch_w = Tensor(input_value(self, 1).shape());
                         dw = &scratch_w;
                       }
                       kernels::linear_backward_weight_acc(
                           dy, input_value(self, 0).data(), rows, d_in, d_out, dw->data(),
                           db ? db->data() : std::span<double>{});
                     }
                   });
}

namespace {

struct AxisSplit {
  std::size_t outer = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit a;
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

}  // namespace

Var concat(const std::vector<Var>& xs, std::size_t axis) {
  if (xs.empty()) throw ConfigError("concat: no inputs");
  Shape out_shape = xs.front().shape();
  if (axis >= out_shape.size()) throw ConfigError("concat: axis out of range");
  out_shape[axis] = 0;
  for (const auto& x : xs) {
    const Shape& s = x.shape();
    if (s.size() != out_shape.size()) throw ConfigError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != out_shape[i]) {
        throw ConfigError("concat: extent mismatch " + shape_string(s) + " vs " +
                          shape_string(xs.front().shape()));
      }
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit sp = split_at(out_shape, axis);
  const std::size_t out_row = out_shape[axis] * sp.inner;
  Tensor y(out_shape);
  std::vector<std::size_t> widths;
  std::size_t pos = 0;
  for (const auto& x : xs) {
    const std::size_t w = x.shape()[axis] * sp.inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(x.value().data().data() + o * w, w, y.data().data() + o * out_row + pos);
    }
    pos += w;
  }
  return make_node("concat", std::move(y), xs, [sp, out_row, widths](Node& self) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::size_t w = widths[i];
      if (Tensor* dx = input_grad(self, i)) {
        for (std::size_t o = 0; o < sp.outer; ++o) {
          const double* src = self.grad.data().data() + o * out_row + pos;
          double* dst = dx->data().data() + o * w;
          for (std::size_t k = 0; k < w; ++k) dst[k] += src[k];
        }
      }
      pos += w;
    }
  });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.size() || begin > end || end > s[axis]) {
    throw ConfigError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                      ") invalid for " + shape_string(s));
  }
  const AxisSplit sp = split_at(s, axis);
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const std::size_t in_row = s[axis] * sp.inner;
  const std::size_t w = (end - begin) * sp.inner;
  const std::size_t off = begin * sp.inner;
  Tensor y(out_shape);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(x.value().data().data() + o * in_row + off, w, y.data().data() + o * w);
  }
  return make_node("slice", std::move(y), {x}, [sp, in_row, w, off](Node& self) {
    Tensor* dx = input_grad(self, 0);
    if (!dx) return;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      const double* src = self.grad.data().data() + o * w;
      double* dst = dx->data().data() + o * in_row + off;
      for (std::size_t k = 0; k < w; ++k) dst[k] += src[k];
    }
  });
}

namespace {

std::size_t fold_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  const std::size_t m = i % period;
  return m < n ? m : period - m;
}

}  // namespace

Var reflect_pad(const Var& x, std::size_t axis, std::size_t after) {
  const Shape& s = x.shape();
  if (axis >= s.size()) throw ConfigError("reflect_pad: axis out of range");
  const std::size_t n = s[axis];
  if (n == 0) throw PreconditionError("reflect_pad: empty axis");
  if (after == 0) return x;
  const AxisSplit sp = split_at(s, axis);
  Shape out_shape = s;
  out_shape[axis] = n + after;
  std::vector<std::size_t> source(n + after);
  for (std::size_t i = 0; i < source.size(); ++i) source[i] = fold_index(i, n);
  Tensor y(out_shape);
  const auto& xv = x.value();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < source.size(); ++i)
      for (std::size_t k = 0; k < sp.inner; ++k)
        y[(o * source.size() + i) * sp.inner + k] = xv[(o * n + source[i]) * sp.inner + k];
  return make_node("reflect_pad", std::move(y), {x}, [sp, n, source](Node& self) {
    Tensor* dx = input_grad(self, 0);
    if (!dx) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < source.size(); ++i)
        for (std::size_t k = 0; k < sp.inner; ++k)
          (*dx)[(o * n + source[i]) * sp.inner + k] +=
              self.grad[(o * source.size() + i) * sp.inner + k];
  });
}

Var map_to_sequence(const Var& x) {
  const MapDims d = map_dims(x.value(), "map_to_sequence");
  if (d.c != 1) throw ConfigError("map_to_sequence: expected a single channel");
  Tensor y({d.n, d.t, d.f});
  const auto& xv = x.value();
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t f = 0; f < d.f; ++f)
      for (std::size_t t = 0; t < d.t; ++t) y[(n * d.t + t) * d.f + f] = xv[(n * d.f + f) * d.t + t];
  return make_node("map_to_sequence", std::move(y), {x}, [d](Node& self) {
    Tensor* dx = input_grad(self, 0);
    if (!dx) return;
    for (std::size_t n = 0; n < d.n; ++n)
      for (std::size_t f = 0; f < d.f; ++f)
        for (std::size_t t = 0; t < d.t; ++t)
          (*dx)[(n * d.f + f) * d.t + t] += self.grad[(n * d.t + t) * d.f + f];
  });
}

Var sequence_to_map(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 3) throw ConfigError("sequence_to_map: expected [n,t,f]");
  const std::size_t N = xv.dim(0), T = xv.dim(1), F = xv.dim(2);
  Tensor y({N, 1, F, T});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) y[(n * F + f) * T + t] = xv[(n * T + t) * F + f];
  return make_node("sequence_to_map", std::move(y), {x}, [N, T, F](Node& self) {
    Tensor* dx = input_grad(self, 0);
    if (!dx) return;
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
          (*dx)[(n * T + t) * F + f] += self.grad[(n * F + f) * T + t];
  });
}

Var add(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) throw ConfigError("add: shape mismatch");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_node("add", std::move(y), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* d = input_grad(self, k)) {
        for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += self.grad[i];
      }
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) throw ConfigError("mul: shape mismatch");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_node("mul", std::move(y), {a, b}, [](Node& self) {
    const Tensor& av = input_value(self, 0);
    const Tensor& bv = input_value(self, 1);
    if (Tensor* da = input_grad(self, 0)) {
      for (std::size_t i = 0; i < da->size(); ++i) (*da)[i] += self.grad[i] * bv[i];
    }
    if (Tensor* db = input_grad(self, 1)) {
      for (std::size_t i = 0; i < db->size(); ++i) (*db)[i] += self.grad[i] * av[i];
    }
  });
}

Var scale(const Var& x, double s) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s * x.value()[i];
  return make_node("scale", std::move(y), {x}, [s](Node& self) {
    if (Tensor* dx = input_grad(self, 0)) {
      for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += s * self.grad[i];
    }
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  return make_node("sum", Tensor({1}, {acc}), {x}, [](Node& self) {
    if (Tensor* dx = input_grad(self, 0)) {
      for (auto& v : dx->data()) v += self.grad[0];
    }
  });
}

Var mean(const Var& x) {
  if (x.value().empty()) throw PreconditionError("mean of empty tensor");
  return scale(sum(x), 1.0 / double(x.value().size()));
}

Var weighted_sum(const Var& x, const Tensor& weights) {
  if (weights.shape() != x.shape()) throw ConfigError("weighted_sum: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * x.value()[i];
  return make_node("weighted_sum", Tensor({1}, {acc}), {x}, [weights](Node& self) {
    if (Tensor* dx = input_grad(self, 0)) {
      for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += self.grad[0] * weights[i];
    }
  });
}

Var mse_loss(const Var& pred, const Var& target) {
  if (pred.shape() != target.shape()) {
    throw ConfigError("mse_loss: shape mismatch " + shape_string(pred.shape()) + " vs " +
                      shape_string(target.shape()));
  }
  const std::size_t n = pred.value().size();
  if (n == 0) throw PreconditionError("mse_loss: empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.value()[i] - target.value()[i];
    acc += d * d;
  }
  return make_node("mse_loss", Tensor({1}, {acc / double(n)}), {pred, target}, [n](Node& self) {
    const Tensor& p = input_value(self, 0);
    const Tensor& t = input_value(self, 1);
    const double g = 2.0 * self.grad[0] / double(n);
    if (Tensor* dp = input_grad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) (*dp)[i] += g * (p[i] - t[i]);
    }
    if (Tensor* dt = input_grad(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) (*dt)[i] -= g * (p[i] - t[i]);
    }
  });
}

}  // namespace mmdlstm::ops
