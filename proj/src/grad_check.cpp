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

#include "mmdlstm/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mmdlstm/error.hpp"

namespace mmdlstm {

GradCheckReport grad_check(const std::function<Var()>& build_loss,
                           const std::vector<NamedVar>& vars, const GradCheckOptions& options) {
  for (const auto& [name, v] : vars) {
    if (!v.requires_grad()) throw PreconditionError("grad_check: '" + name + "' is not a leaf");
    Var(v).zero_grad();
  }
  Var loss = build_loss();
  backward(loss);
  std::vector<Tensor> analytic;
  for (const auto& [name, v] : vars) {
    analytic.push_back(v.grad().empty() ? Tensor(v.shape()) : v.grad());
  }
  if (options.tamper) options.tamper(analytic);
  double floor = options.floor;
  for (const auto& g : analytic)
    for (double v : g.data()) floor = std::max(floor, options.scale_floor * std::abs(v));

  auto eval = [&]() {
    NoGradGuard guard;
    return build_loss().value()[0];
  };

  GradCheckReport report;
  const double base = options.skip_kinks ? eval() : 0.0;
  std::mt19937_64 rng(options.seed);
  for (std::size_t k = 0; k < vars.size(); ++k) {
    Var v = vars[k].second;
    Tensor& value = v.mutable_value();
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords && coords.size() > options.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords);
    }
    for (std::size_t i : coords) {
      const double original = value[i];
      const double h = options.step * std::max(1.0, std::abs(original));
      value[i] = original + h;
      const double up = eval();
      value[i] = original - h;
      const double down = eval();
      value[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      if (options.skip_kinks) {
        const double right = (up - base) / h, left = (base - down) / h;
        if (std::abs(right - left) > options.tolerance * denom) {
          ++report.skipped;
          continue;
        }
      }
      const double err = std::abs(a - numeric) / denom;
      ++report.checked;
      if (err > report.max_rel_error || report.worst_name.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        if (err >= report.max_rel_error) {
          report.worst_name = vars[k].first;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace mmdlstm
