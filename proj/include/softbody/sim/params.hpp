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

#include <string>
#include <utility>
#include <vector>

#include "softbody/common.hpp"

namespace softbody::sim {

/// How p2g-style scatters accumulate into shared grid nodes.
enum class ScatterMode {
  kAtomic,         // unordered atomic adds, fastest with many threads
  kDeterministic,  // colored per-cell ordered accumulation, bit-reproducible
};

struct SimParams {
  int dim = 2;
  Real dx = 0.01;
  Real dt = 1e-4;
  Real domain_length = 1.0;  // L, side of the square/cubic grid
  int nodes_per_axis = 100;  // nodes sit at i*dx for i in [0, nodes_per_axis)
  Eigen::Vector3d gravity{0.0, -9.8, 0.0};
  Real total_time = 0.5;
  long n_steps = 5000;
  Real blowup_velocity = 200.0;  // |v_p| above this aborts the run
  long frame_stride = 0;         // 0 disables frame capture
  ScatterMode scatter = ScatterMode::kDeterministic;

  /// Derives nodes_per_axis, n_steps and the blow-up threshold from the
  /// primary fields. blowup_factor multiplies L/T.
  void finalize(Real blowup_factor = 100.0);

  bool operator==(const SimParams&) const = default;
};

struct MaterialConstants {
  Real rho0 = 1000.0;
  Real E0 = 1e5;
  Real nu0 = 0.4;
  Real lambda0 = 0.0;
  Real mu0 = 0.0;
  Real eps = 1e-5;

  /// Builds constants with Lamé parameters filled from (E0, nu0).
  static MaterialConstants from_elastic(Real rho0, Real E0, Real nu0, Real eps);

  bool operator==(const MaterialConstants&) const = default;
};

/// Lamé constants (lambda, mu) from Young's modulus and Poisson ratio.
std::pair<Real, Real> lame_from_elastic(Real E, Real nu);

/// Largest stable explicit step: dx over the dilatational wave speed.
Real cfl_max_dt(const SimParams& params, const MaterialConstants& mat);

enum class BoundaryMode { kCoulomb, kNoSlip, kStickyAlways };

enum class BoundarySide { kLower, kUpper };

/// Prescribed rigid-boundary motion.
struct BoundaryMotion {
  enum class Kind { kConstant, kSine };
  Kind kind = Kind::kConstant;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // kConstant
  int axis = 0;                                        // kSine: displacement A sin(w t) along axis
  Real amplitude = 0.0;
  Real omega = 0.0;

  Eigen::Vector3d at(Real t) const;

  bool operator==(const BoundaryMotion&) const = default;
};

/// Axis-aligned, grid-aligned rigid boundary. A node belongs to the boundary
/// when its coordinate along `axis` is at or beyond `plane` on `side`.
struct BoundarySpec {
  std::string name = "floor";
  int axis = 1;
  BoundarySide side = BoundarySide::kLower;
  Real plane = 0.03;
  Eigen::Vector3d normal{0.0, 1.0, 0.0};
  BoundaryMode mode = BoundaryMode::kNoSlip;
  Real friction = 0.0;
  BoundaryMotion motion;

  bool contains_node(long index_along_axis, Real dx) const {
    const Real x = static_cast<Real>(index_along_axis) * dx;
    const Real tol = 1e-9 * dx;
    return side == BoundarySide::kLower ? x <= plane + tol : x >= plane - tol;
  }

  /// Throws DomainError if the normal is not unit or friction is negative.
  void validate(int dim) const;

  bool operator==(const BoundarySpec&) const = default;
};

std::string to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& s);

}  // namespace softbody::sim
