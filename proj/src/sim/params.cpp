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

#include "softbody/sim/params.hpp"

#include <cmath>
#include <tuple>

namespace softbody::sim {

void SimParams::finalize(Real blowup_factor) {
  nodes_per_axis = static_cast<int>(std::lround(domain_length / dx));
  n_steps = std::lround(total_time / dt);
  blowup_velocity = blowup_factor * domain_length / total_time;
}

std::pair<Real, Real> lame_from_elastic(Real E, Real nu) {
  if (!(E > 0.0)) throw DomainError("Young's modulus must be positive");
  if (!(nu > -1.0) || !(nu < 0.5)) {
    throw DomainError("Poisson ratio must lie in (-1, 0.5)");
  }
  const Real lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const Real mu = E / (2.0 * (1.0 + nu));
  return {lambda, mu};
}

MaterialConstants MaterialConstants::from_elastic(Real rho0, Real E0, Real nu0, Real eps) {
  MaterialConstants m;
  m.rho0 = rho0;
  m.E0 = E0;
  m.nu0 = nu0;
  m.eps = eps;
  std::tie(m.lambda0, m.mu0) = lame_from_elastic(E0, nu0);
  return m;
}

Real cfl_max_dt(const SimParams& params, const MaterialConstants& mat) {
  const Real wave_speed = std::sqrt((mat.lambda0 + 2.0 * mat.mu0) / mat.rho0);
  return params.dx / wave_speed;
}

Eigen::Vector3d BoundaryMotion::at(Real t) const {
  if (kind == Kind::kConstant) return velocity;
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  v[axis] = amplitude * omega * std::cos(omega * t);
  return v;
}

void BoundarySpec::validate(int dim) const {
  if (axis < 0 || axis >= dim) throw DomainError("boundary '" + name + "': axis out of range");
  const Real n = normal.head(dim).norm();
  if (std::abs(n - 1.0) > 1e-12) throw DomainError("boundary '" + name + "': normal must be unit");
  if (friction < 0.0) throw DomainError("boundary '" + name + "': friction must be >= 0");
}

std::string to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::kCoulomb: return "coulomb";
    case BoundaryMode::kNoSlip: return "no_slip";
    case BoundaryMode::kStickyAlways: return "sticky_always";
  }
  return "unknown";
}

BoundaryMode boundary_mode_from_string(const std::string& s) {
  if (s == "coulomb") return BoundaryMode::kCoulomb;
  if (s == "no_slip") return BoundaryMode::kNoSlip;
  if (s == "sticky_always") return BoundaryMode::kStickyAlways;
  throw DomainError("unknown boundary mode '" + s + "'");
}

}  // namespace softbody::sim
