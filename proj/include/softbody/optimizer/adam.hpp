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

#pragma once

#include <vector>

#include "softbody/common.hpp"

namespace softbody::optimizer {

/// Raised when a gradient handed to the optimizer has NaN/inf entries.
class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  VectorX m;
  VectorX v;
  long step_count = 0;
  Real step_size = 0.01;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;

  /// Zeroes both moments and the step count.
  void reset(long n);
};

/// One bias-corrected Adam update of x in place.
void adam_step(AdamState& state, VectorX& x, const VectorX& grad);

/// Clamps x[begin, end) to [lo, hi].
void clamp_range(VectorX& x, long begin, long end, Real lo, Real hi);

/// True iff history holds >= 2 * window values and the mean of the last
/// `window` differs from the mean of the preceding `window` by less than
/// rel_tol relative to the latter. A latter mean below 1e-30 in magnitude
/// counts as converged.
bool inner_converged(const std::vector<Real>& history, int window = 10, Real rel_tol = 1e-3);

}  // namespace softbody::optimizer
