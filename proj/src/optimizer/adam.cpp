// Copyright 2026 The softbody4d Authors
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

#include "softbody/optimizer/adam.hpp"

#include <algorithm>
#include <cmath>

namespace softbody::optimizer {

void AdamState::reset(long n) {
  m = VectorX::Zero(n);
  v = VectorX::Zero(n);
  step_count = 0;
}

void adam_step(AdamState& state, VectorX& x, const VectorX& grad) {
  if (grad.size() != x.size()) throw ShapeError("adam_step: gradient size mismatch");
  if (!grad.allFinite()) throw NonFiniteGradientError("adam_step: non-finite gradient");
  if (state.m.size() != x.size()) state.reset(x.size());
  ++state.step_count;
  const Real t = static_cast<Real>(state.step_count);
  const Real c1 = 1.0 - std::pow(state.beta1, t);
  const Real c2 = 1.0 - std::pow(state.beta2, t);
  for (long i = 0; i < x.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const Real m_hat = state.m[i] / c1;
    const Real v_hat = state.v[i] / c2;
    x[i] -= state.step_size * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void clamp_range(VectorX& x, long begin, long end, Real lo, Real hi) {
  for (long i = begin; i < end; ++i) x[i] = std::min(hi, std::max(lo, x[i]));
}

bool inner_converged(const std::vector<Real>& history, int window, Real rel_tol) {
  const long n = static_cast<long>(history.size());
  if (n < 2L * window) return false;
  Real last = 0.0;
  Real prev = 0.0;
  for (long i = n - window; i < n; ++i) last += history[i];
  for (long i = n - 2L * window; i < n - window; ++i) prev += history[i];
  last /= window;
  prev /= window;
  if (std::abs(prev) < 1e-30) return true;
  return std::abs(last - prev) / std::abs(prev) < rel_tol;
}

}  // namespace softbody::optimizer
