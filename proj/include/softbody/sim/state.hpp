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

#include <algorithm>
#include <array>
#include <vector>

#include "softbody/common.hpp"

namespace softbody::sim {

/// Dynamic per-particle state: position, velocity, deformation gradient and
/// the affine velocity matrix.
template <int Dim, class S = Real>
struct ParticleState {
  std::vector<Vec<Dim, S>> x;
  std::vector<Vec<Dim, S>> v;
  std::vector<Mat<Dim, S>> F;
  std::vector<Mat<Dim, S>> C;

  std::size_t size() const { return x.size(); }

  void resize(std::size_t n) {
    x.assign(n, Vec<Dim, S>::Zero());
    v.assign(n, Vec<Dim, S>::Zero());
    F.assign(n, Mat<Dim, S>::Identity());
    C.assign(n, Mat<Dim, S>::Zero());
  }

  /// Zero-valued state of the same size, used for adjoints.
  void set_zero(std::size_t n) {
    resize(n);
    std::fill(F.begin(), F.end(), Mat<Dim, S>::Zero());
  }

  bool operator==(const ParticleState&) const = default;
};

/// Per-particle constants for one run, derived from the design.
template <int Dim, class S = Real>
struct ParticleProps {
  std::vector<S> mass;
  std::vector<S> vol0;
  std::vector<S> lambda;
  std::vector<S> mu;
  std::vector<int> design_index;  // column into the design fields

  std::size_t size() const { return mass.size(); }
};

/// Dense background grid. Only the active box [lo, hi) touched by the most
/// recent transfer holds nonzero data. `momentum` keeps the transferred
/// momentum; `velocity` holds the updated (post force and boundary) velocity,
/// so the updated momentum is mass * velocity.
template <int Dim, class S = Real>
struct GridField {
  int n = 0;
  std::vector<S> mass;
  std::vector<Vec<Dim, S>> momentum;
  std::vector<Vec<Dim, S>> velocity;
  std::array<int, Dim> lo{};
  std::array<int, Dim> hi{};

  GridField() = default;
  explicit GridField(int nodes_per_axis) { reset(nodes_per_axis); }

  void reset(int nodes_per_axis) {
    n = nodes_per_axis;
    long total = 1;
    for (int a = 0; a < Dim; ++a) total *= n;
    mass.assign(total, S(0.0));
    momentum.assign(total, Vec<Dim, S>::Zero());
    velocity.assign(total, Vec<Dim, S>::Zero());
    lo.fill(0);
    hi.fill(0);
  }

  long node_count() const { return static_cast<long>(mass.size()); }

  long flat(const std::array<int, Dim>& idx) const {
    long f = 0;
    for (int a = Dim - 1; a >= 0; --a) f = f * n + idx[a];
    return f;
  }

  std::array<int, Dim> unflat(long f) const {
    std::array<int, Dim> idx{};
    for (int a = 0; a < Dim; ++a) {
      idx[a] = static_cast<int>(f % n);
      f /= n;
    }
    return idx;
  }

  long box_volume() const {
    long vol = 1;
    for (int a = 0; a < Dim; ++a) vol *= std::max(0, hi[a] - lo[a]);
    return vol;
  }

  /// Visits every node of the active box in a fixed order.
  template <class Fn>
  void for_each_active(Fn&& fn) const {
    const long vol = box_volume();
    for (long k = 0; k < vol; ++k) fn(flat(box_index(k)));
  }

  std::array<int, Dim> box_index(long k) const {
    std::array<int, Dim> idx{};
    for (int a = 0; a < Dim; ++a) {
      const int ext = hi[a] - lo[a];
      idx[a] = lo[a] + static_cast<int>(k % ext);
      k /= ext;
    }
    return idx;
  }

  void clear_active() {
    for_each_active([&](long f) {
      mass[f] = S(0.0);
      momentum[f].setZero();
      velocity[f].setZero();
    });
  }
};

}  // namespace softbody::sim
