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

#include "softbody/sim/simulator.hpp"

#include <cstdint>
#include <fstream>
#include <utility>

#include <fmt/format.h>
#include <fmt/os.h>
#include "json.hpp"

namespace softbody::sim {

void Actuation::at_step(long k, std::vector<Real>& u) const {
  const long np = weights.rows();
  u.resize(np);
  if (empty()) {
    std::fill(u.begin(), u.end(), 0.0);
    return;
  }
  const auto row = signal.row(k);
  for (long p = 0; p < np; ++p) u[p] = scale[p] * weights.row(p).dot(row);
}

template <int Dim>
Vec<Dim> center_of_gravity(const ParticleState<Dim>& s, const ParticleProps<Dim>& props) {
  Vec<Dim> sum = Vec<Dim>::Zero();
  Real total = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    sum += props.mass[p] * s.x[p];
    total += props.mass[p];
  }
  if (!(total > 0.0)) throw DomainError("center_of_gravity: total mass is zero");
  return sum / total;
}

template <int Dim>
Vec<Dim> mass_avg_velocity(const ParticleState<Dim>& s, const ParticleProps<Dim>& props) {
  Vec<Dim> sum = Vec<Dim>::Zero();
  Real total = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    sum += props.mass[p] * s.v[p];
    total += props.mass[p];
  }
  if (!(total > 0.0)) throw DomainError("mass_avg_velocity: total mass is zero");
  return sum / total;
}

template <int Dim>
Vec<Dim> tip_centroid(const ParticleState<Dim>& s, const std::vector<long>& tip_set) {
  if (tip_set.empty()) throw DomainError("tip set is empty");
  Vec<Dim> sum = Vec<Dim>::Zero();
  for (long p : tip_set) sum += s.x[p];
  return sum / static_cast<Real>(tip_set.size());
}

Real spin_ratio(const ParticleState<3>& s, const ParticleProps<3>& props) {
  const Vec<3> xg = center_of_gravity<3>(s, props);
  const Vec<3> vg = mass_avg_velocity<3>(s, props);
  Real h = 0.0;
  Real inertia = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    const Vec<3> r = s.x[p] - xg;
    h += props.mass[p] * r.cross(s.v[p] - vg)[1];
    inertia += props.mass[p] * r.squaredNorm();
  }
  if (!(inertia > 0.0)) throw DomainError("spin_ratio: zero moment of inertia");
  return h / inertia;
}

template <int Dim>
Simulator<Dim>::Simulator(const SimParams& params, std::vector<BoundarySpec> boundaries)
    : params_(params), boundaries_(std::move(boundaries)), grid_(params.nodes_per_axis) {
  for (const auto& b : boundaries_) b.validate(Dim);
}

template <int Dim>
void Simulator<Dim>::rebuild_grid(const ParticleState<Dim>& s, const ParticleProps<Dim>& props,
                                  const std::vector<Real>& u, long k, BranchLog* log) {
  try {
    p2g<Dim, Real>(s, props, u, grid_, params_);
  } catch (const DomainError& e) {
    throw InstabilityError(e.what(), k);
  }
  grid_update<Dim, Real>(grid_, params_, boundaries_, static_cast<Real>(k) * params_.dt, k, log);
}

template <int Dim>
void Simulator<Dim>::step(ParticleState<Dim>& s, const ParticleProps<Dim>& props,
                          const std::vector<Real>& u, long k, BranchLog* log) {
  rebuild_grid(s, props, u, k, log);
  const G2PStatus status = g2p<Dim, Real>(grid_, s, s, params_);
  if (status.bad_particle >= 0) {
    const long p = status.bad_particle;
    if (status.inverted) {
      throw InstabilityError(fmt::format("det F <= 0 at particle {}", p), k);
    }
    throw InstabilityError(fmt::format("particle {} speed {:.4g} m/s exceeds blow-up threshold {:.4g}",
                                       p, s.v[p].norm(), params_.blowup_velocity),
                           k);
  }
}

template <int Dim>
Trajectory<Dim> Simulator<Dim>::run(const ParticleState<Dim>& initial,
                                    const ParticleProps<Dim>& props, const Actuation& act,
                                    const RecordOptions& options, ParticleState<Dim>* final_state,
                                    BranchLog* log) {
  const long n = params_.n_steps;
  Trajectory<Dim> traj;
  traj.dt = params_.dt;
  traj.n_steps = n;
  if (options.contact) {
    traj.contact.assign(boundaries_.size(), {});
    for (const auto& b : boundaries_) traj.contact_names.push_back(b.name);
  }
  ParticleState<Dim> s = initial;
  std::vector<Real> u;

  auto record = [&](long k) {
    traj.t.push_back(static_cast<Real>(k) * params_.dt);
    traj.com.push_back(center_of_gravity<Dim>(s, props));
    traj.mass_avg_velocity.push_back(mass_avg_velocity<Dim>(s, props));
    if (!options.tip_set.empty()) traj.tip_centroid.push_back(tip_centroid<Dim>(s, options.tip_set));
    if constexpr (Dim == 3) {
      if (options.spin) traj.spin_ratio.push_back(spin_ratio(s, props));
    }
    if (params_.frame_stride > 0 && k % params_.frame_stride == 0) {
      Frame<Dim> f;
      f.step = k;
      f.t = static_cast<Real>(k) * params_.dt;
      f.x = s.x;
      f.v = s.v;
      f.det_f.resize(s.size());
      for (std::size_t p = 0; p < s.size(); ++p) f.det_f[p] = s.F[p].determinant();
      act.at_step(std::min(k, n), f.u);
      if (act.empty()) f.u.assign(s.size(), 0.0);
      traj.frames.push_back(std::move(f));
    }
  };

  record(0);
  for (long k = 0; k < n; ++k) {
    act.at_step(k, u);
    if (act.empty()) u.assign(s.size(), 0.0);
    step(s, props, u, k, log);
    if (options.contact) {
      for (std::size_t b = 0; b < boundaries_.size(); ++b) {
        traj.contact[b].push_back(contact_force<Dim>(grid_, boundaries_[b], params_));
      }
    }
    record(k + 1);
  }
  if (final_state != nullptr) *final_state = std::move(s);
  return traj;
}

template <int Dim>
void write_trajectory(const Trajectory<Dim>& traj, long particle_count, long stride,
                      const std::string& bin_path, const std::string& json_path) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + bin_path);
  const std::int32_t dim = Dim;
  const std::int64_t np = particle_count;
  const std::int64_t nf = static_cast<std::int64_t>(traj.frames.size());
  const std::int64_t st = stride;
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&np), sizeof np);
  out.write(reinterpret_cast<const char*>(&nf), sizeof nf);
  out.write(reinterpret_cast<const char*>(&st), sizeof st);
  std::vector<double> buf;
  for (const auto& f : traj.frames) {
    buf.clear();
    for (const auto& x : f.x) buf.insert(buf.end(), x.data(), x.data() + Dim);
    for (const auto& v : f.v) buf.insert(buf.end(), v.data(), v.data() + Dim);
    buf.insert(buf.end(), f.det_f.begin(), f.det_f.end());
    buf.insert(buf.end(), f.u.begin(), f.u.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed: " + bin_path);

  nlohmann::json meta;
  meta["format"] = "softbody-trajectory";
  meta["version"] = 1;
  meta["dim"] = Dim;
  meta["particle_count"] = particle_count;
  meta["frame_count"] = nf;
  meta["stride"] = stride;
  meta["dt"] = traj.dt;
  meta["n_steps"] = traj.n_steps;
  meta["endianness"] = "little";
  meta["scalar"] = "float64";
  meta["header"] = {"int32 dim", "int64 particle_count", "int64 frame_count", "int64 stride"};
  meta["frame_layout"] = {"x[particle_count][dim]", "v[particle_count][dim]",
                          "det_f[particle_count]", "u[particle_count]"};
  std::vector<long> steps;
  for (const auto& f : traj.frames) steps.push_back(f.step);
  meta["frame_steps"] = steps;
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot open " + json_path);
  js << meta.dump(2) << "\n";
}

template <int Dim>
std::vector<Frame<Dim>> read_trajectory_frames(const std::string& bin_path, Real dt) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin_path);
  std::int32_t dim = 0;
  std::int64_t np = 0;
  std::int64_t nf = 0;
  std::int64_t st = 0;
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&np), sizeof np);
  in.read(reinterpret_cast<char*>(&nf), sizeof nf);
  in.read(reinterpret_cast<char*>(&st), sizeof st);
  if (!in || dim != Dim || np < 0 || nf < 0) {
    throw std::runtime_error("malformed trajectory header: " + bin_path);
  }
  std::vector<Frame<Dim>> frames(nf);
  std::vector<double> buf(static_cast<std::size_t>(np) * (2 * Dim + 2));
  for (std::int64_t i = 0; i < nf; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated trajectory: " + bin_path);
    auto& f = frames[i];
    f.step = i * st;
    f.t = static_cast<Real>(f.step) * dt;
    f.x.resize(np);
    f.v.resize(np);
    const double* q = buf.data();
    for (auto& x : f.x) {
      for (int a = 0; a < Dim; ++a) x[a] = *q++;
    }
    for (auto& v : f.v) {
      for (int a = 0; a < Dim; ++a) v[a] = *q++;
    }
    f.det_f.assign(q, q + np);
    q += np;
    f.u.assign(q, q + np);
  }
  return frames;
}

template <int Dim>
void write_contact_csv(const Trajectory<Dim>& traj, std::size_t boundary, const std::string& path) {
  auto out = fmt::output_file(path);
  out.print(Dim == 2 ? "t,fx,fy\n" : "t,fx,fy,fz\n");
  const auto& series = traj.contact.at(boundary);
  for (std::size_t k = 0; k < series.size(); ++k) {
    out.print("{:.17g}", static_cast<Real>(k) * traj.dt);
    for (int a = 0; a < Dim; ++a) out.print(",{:.17g}", series[k][a]);
    out.print("\n");
  }
}

template <int Dim>
void write_com_csv(const Trajectory<Dim>& traj, const std::string& path) {
  auto out = fmt::output_file(path);
  out.print(Dim == 2 ? "t,x,y\n" : "t,x,y,z\n");
  for (std::size_t k = 0; k < traj.com.size(); ++k) {
    out.print("{:.17g}", traj.t[k]);
    for (int a = 0; a < Dim; ++a) out.print(",{:.17g}", traj.com[k][a]);
    out.print("\n");
  }
}

#define SOFTBODY_INSTANTIATE(D)                                                                    \
  template Vec<D> center_of_gravity<D>(const ParticleState<D>&, const ParticleProps<D>&);          \
  template Vec<D> mass_avg_velocity<D>(const ParticleState<D>&, const ParticleProps<D>&);          \
  template Vec<D> tip_centroid<D>(const ParticleState<D>&, const std::vector<long>&);              \
  template class Simulator<D>;                                                                     \
  template void write_trajectory<D>(const Trajectory<D>&, long, long, const std::string&,         \
                                    const std::string&);                                           \
  template std::vector<Frame<D>> read_trajectory_frames<D>(const std::string&, Real);             \
  template void write_contact_csv<D>(const Trajectory<D>&, std::size_t, const std::string&);      \
  template void write_com_csv<D>(const Trajectory<D>&, const std::string&);

SOFTBODY_INSTANTIATE(2)
SOFTBODY_INSTANTIATE(3)

#undef SOFTBODY_INSTANTIATE

}  // namespace softbody::sim
