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
#include <vector>

#include "softbody/common.hpp"
#include "softbody/sim/kernels.hpp"
#include "softbody/sim/params.hpp"
#include "softbody/sim/state.hpp"

namespace softbody::sim {

/// Per-particle actuation u_p(t_k) = scale_p * sum_j weights(p, j) * signal(k, j).
struct Actuation {
  MatrixX weights;  // particles x channels
  VectorX scale;    // particles
  MatrixX signal;   // (n_steps + 1) x channels

  bool empty() const { return weights.size() == 0; }
  void at_step(long k, std::vector<Real>& u) const;
};

/// Full snapshot of the particle set at one step.
template <int Dim>
struct Frame {
  long step = 0;
  Real t = 0.0;
  std::vector<Vec<Dim>> x;
  std::vector<Vec<Dim>> v;
  std::vector<Real> det_f;
  std::vector<Real> u;
};

/// What run_forward records besides the per-step summaries.
struct RecordOptions {
  std::vector<long> tip_set;  // particle indices averaged into the tip centroid
  bool contact = true;
  bool spin = false;  // angular-momentum / inertia ratio about +y (3D)
};

/// Per-step summaries for steps 0..n_steps, plus optional frames.
template <int Dim>
struct Trajectory {
  Real dt = 0.0;
  long n_steps = 0;
  std::vector<Real> t;
  std::vector<Vec<Dim>> com;
  std::vector<Vec<Dim>> mass_avg_velocity;
  std::vector<Vec<Dim>> tip_centroid;
  std::vector<Real> spin_ratio;
  // contact[b][k]: reaction of boundary b during step k -> k + 1, k < n_steps
  std::vector<std::vector<Vec<Dim>>> contact;
  std::vector<std::string> contact_names;
  std::vector<Frame<Dim>> frames;
};

template <int Dim>
Vec<Dim> center_of_gravity(const ParticleState<Dim>& s, const ParticleProps<Dim>& props);
template <int Dim>
Vec<Dim> mass_avg_velocity(const ParticleState<Dim>& s, const ParticleProps<Dim>& props);
template <int Dim>
Vec<Dim> tip_centroid(const ParticleState<Dim>& s, const std::vector<long>& tip_set);
/// (sum m (x - x_g) x (v - v_g)) . e_y / sum m |x - x_g|^2. 3D only.
Real spin_ratio(const ParticleState<3>& s, const ParticleProps<3>& props);

/// Owns the grid and the boundary list of one simulation.
template <int Dim>
class Simulator {
 public:
  Simulator(const SimParams& params, std::vector<BoundarySpec> boundaries);

  const SimParams& params() const { return params_; }
  const std::vector<BoundarySpec>& boundaries() const { return boundaries_; }
  const GridField<Dim>& grid() const { return grid_; }

  /// Advances `s` in place by one step from t = k dt with actuation u.
  /// Throws InstabilityError on blow-up, inversion or domain exit.
  void step(ParticleState<Dim>& s, const ParticleProps<Dim>& props, const std::vector<Real>& u,
            long k, BranchLog* log = nullptr);

  /// p2g followed by grid_update for the state at step k, leaving the grid
  /// ready for g2p. Used by the adjoint sweep to rebuild grid states.
  void rebuild_grid(const ParticleState<Dim>& s, const ParticleProps<Dim>& props,
                    const std::vector<Real>& u, long k, BranchLog* log = nullptr);

  /// Runs params.n_steps steps from `initial` and records summaries.
  Trajectory<Dim> run(const ParticleState<Dim>& initial, const ParticleProps<Dim>& props,
                      const Actuation& act, const RecordOptions& options,
                      ParticleState<Dim>* final_state = nullptr, BranchLog* log = nullptr);

 private:
  SimParams params_;
  std::vector<BoundarySpec> boundaries_;
  GridField<Dim> grid_;
};

/// Binary frame dump (see README for the layout) and its JSON sidecar.
template <int Dim>
void write_trajectory(const Trajectory<Dim>& traj, long particle_count, long stride,
                      const std::string& bin_path, const std::string& json_path);

/// Reads back the frames of a trajectory.bin file.
template <int Dim>
std::vector<Frame<Dim>> read_trajectory_frames(const std::string& bin_path, Real dt);

/// `t,fx,fy[,fz]` for one boundary.
template <int Dim>
void write_contact_csv(const Trajectory<Dim>& traj, std::size_t boundary, const std::string& path);

/// `t,x,y[,z]` center of gravity per step.
template <int Dim>
void write_com_csv(const Trajectory<Dim>& traj, const std::string& path);

}  // namespace softbody::sim
