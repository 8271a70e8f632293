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

// MLS-MPM transfer kernels (quadratic B-spline, fused internal force) and
// their hand-written adjoints. Forward kernels are templated on the scalar so
// that a tangent-scalar instantiation produces exact Jacobian-vector products.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

#include "softbody/common.hpp"
#include "softbody/sim/params.hpp"
#include "softbody/sim/state.hpp"
#include "softbody/sim/stress.hpp"

namespace softbody::sim {

/// A particle sits too close to the grid border for its 3^d stencil.
class OutOfDomainError : public DomainError {
 public:
  OutOfDomainError(const std::string& what, long particle)
      : DomainError(what + " (particle " + std::to_string(particle) + ")"), particle_(particle) {}
  long particle() const { return particle_; }

 private:
  long particle_;
};

/// Order-independent fingerprint of the boundary branches taken in a run.
/// Two runs with equal fingerprints took identical contact branches.
struct BranchLog {
  std::uint64_t fingerprint = 0;
  long active_count = 0;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t entry(long step, long node, int boundary, int branch) {
    return mix(mix(mix(static_cast<std::uint64_t>(step)) ^ static_cast<std::uint64_t>(node)) ^
               (static_cast<std::uint64_t>(boundary) << 8 | static_cast<std::uint64_t>(branch)));
  }
};

namespace detail {

struct PlainAdd {
  template <class T>
  static void add(T& a, const T& b) { a += b; }
};

struct AtomicAdd {
  template <class T>
  static void add(T& a, const T& b) {
    _Pragma("omp atomic")
    a += b;
  }
};

template <class Add, class V>
inline void add_vec(V& a, const V& b) {
  for (int i = 0; i < a.size(); ++i) Add::add(a[i], b[i]);
}

template <int Dim, class Fn>
inline void for_each_offset(Fn&& fn) {
  constexpr int count = Dim == 2 ? 9 : 27;
  std::array<int, Dim> o{};
  for (int k = 0; k < count; ++k) {
    int r = k;
    for (int a = 0; a < Dim; ++a) {
      o[a] = r % 3;
      r /= 3;
    }
    fn(o);
  }
}

}  // namespace detail

/// Quadratic B-spline stencil of one particle.
template <int Dim, class S>
struct Stencil {
  std::array<int, Dim> base{};
  Vec<Dim, S> fx;                          // position relative to base, in cells
  std::array<std::array<S, 3>, Dim> w{};   // per-axis weights
  std::array<std::array<S, 3>, Dim> dw{};  // per-axis d(weight)/d(fx)

  S weight(const std::array<int, Dim>& o) const {
    S r = w[0][o[0]];
    for (int a = 1; a < Dim; ++a) r = r * w[a][o[a]];
    return r;
  }

  /// Gradient of weight(o) with respect to the particle position.
  Vec<Dim, S> weight_grad(const std::array<int, Dim>& o, Real inv_dx) const {
    Vec<Dim, S> g;
    for (int a = 0; a < Dim; ++a) {
      S r = dw[a][o[a]] * inv_dx;
      for (int b = 0; b < Dim; ++b) {
        if (b != a) r = r * w[b][o[b]];
      }
      g[a] = r;
    }
    return g;
  }

  Vec<Dim, S> offset_position(const std::array<int, Dim>& o, Real dx) const {
    Vec<Dim, S> d;
    for (int a = 0; a < Dim; ++a) d[a] = (S(static_cast<double>(o[a])) - fx[a]) * dx;
    return d;
  }
};

template <int Dim, class S>
inline std::array<int, Dim> stencil_base(const Vec<Dim, S>& x, Real inv_dx) {
  std::array<int, Dim> base{};
  for (int a = 0; a < Dim; ++a) {
    base[a] = static_cast<int>(std::floor(value(x[a]) * inv_dx - 0.5));
  }
  return base;
}

template <int Dim, class S>
Stencil<Dim, S> make_stencil(const Vec<Dim, S>& x, Real inv_dx) {
  Stencil<Dim, S> s;
  s.base = stencil_base<Dim, S>(x, inv_dx);
  for (int a = 0; a < Dim; ++a) {
    const S f = x[a] * inv_dx - S(static_cast<double>(s.base[a]));
    s.fx[a] = f;
    const S t0 = S(1.5) - f;
    const S t1 = f - S(1.0);
    const S t2 = f - S(0.5);
    s.w[a] = {S(0.5) * t0 * t0, S(0.75) - t1 * t1, S(0.5) * t2 * t2};
    s.dw[a] = {-t0, S(-2.0) * t1, t2};
  }
  return s;
}

template <int Dim>
inline std::array<int, Dim> add_offset(const std::array<int, Dim>& base,
                                       const std::array<int, Dim>& o) {
  std::array<int, Dim> r{};
  for (int a = 0; a < Dim; ++a) r[a] = base[a] + o[a];
  return r;
}

/// Runs `body` once per particle, where body is a generic lambda templated on
/// an accumulation policy. Atomic mode runs particles in parallel with atomic
/// adds. Deterministic mode bins particles by stencil base cell and sweeps the
/// 3^d cell colors in a fixed order; same-colored cells have disjoint
/// stencils, so every node sees the same accumulation order on any thread
/// count. Non-floating scalars always run serially in particle order.
template <int Dim, class S, class Body>
void scatter_particles(const std::vector<Vec<Dim, S>>& x, Real inv_dx, int n, ScatterMode mode,
                       Body&& body) {
  const long np = static_cast<long>(x.size());
  if constexpr (!std::is_floating_point_v<S>) {
    for (long p = 0; p < np; ++p) body.template operator()<detail::PlainAdd>(p);
  } else {
    if (mode == ScatterMode::kAtomic) {
#pragma omp parallel for schedule(static)
      for (long p = 0; p < np; ++p) body.template operator()<detail::AtomicAdd>(p);
      return;
    }
    std::vector<long> cell(np);
    std::vector<int> color(np);
    for (long p = 0; p < np; ++p) {
      const auto base = stencil_base<Dim, S>(x[p], inv_dx);
      long c = 0;
      int col = 0;
      for (int a = Dim - 1; a >= 0; --a) {
        c = c * n + base[a];
        col = col * 3 + base[a] % 3;
      }
      cell[p] = c;
      color[p] = col;
    }
    std::vector<long> order(np);
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(),
                     [&](long a, long b) { return cell[a] < cell[b]; });
    constexpr int n_colors = Dim == 2 ? 9 : 27;
    std::array<std::vector<std::pair<long, long>>, n_colors> groups;
    for (long i = 0; i < np;) {
      long j = i + 1;
      while (j < np && cell[order[j]] == cell[order[i]]) ++j;
      groups[color[order[i]]].emplace_back(i, j);
      i = j;
    }
    for (const auto& list : groups) {
      const long ng = static_cast<long>(list.size());
#pragma omp parallel for schedule(static)
      for (long g = 0; g < ng; ++g) {
        for (long i = list[g].first; i < list[g].second; ++i) {
          body.template operator()<detail::PlainAdd>(order[i]);
        }
      }
    }
  }
}

/// Particle-to-grid transfer of mass and momentum with the fused MLS-MPM
/// internal force G_p = -dt (4/dx^2) vol0_p (tau_mat + tau_act).
/// Throws OutOfDomainError when a stencil leaves the grid and DomainError when
/// a deformation gradient is inverted.
template <int Dim, class S>
void p2g(const ParticleState<Dim, S>& state, const ParticleProps<Dim, S>& props,
         const std::vector<S>& u, GridField<Dim, S>& grid, const SimParams& params) {
  const long np = static_cast<long>(state.size());
  if (static_cast<long>(props.size()) != np || static_cast<long>(u.size()) != np) {
    throw ShapeError("p2g: particle arrays disagree in length");
  }
  const Real dx = params.dx;
  const Real inv_dx = 1.0 / dx;
  std::array<int, Dim> lo;
  std::array<int, Dim> hi;
  lo.fill(grid.n);
  hi.fill(0);
  for (long p = 0; p < np; ++p) {
    const auto base = stencil_base<Dim, S>(state.x[p], inv_dx);
    for (int a = 0; a < Dim; ++a) {
      if (base[a] < 0 || base[a] + 2 > grid.n - 1) {
        throw OutOfDomainError("particle within one cell of the grid border", p);
      }
      lo[a] = std::min(lo[a], base[a]);
      hi[a] = std::max(hi[a], base[a] + 3);
    }
    if (!(value(state.F[p].determinant()) > 0.0)) {
      throw DomainError("inverted deformation gradient at particle " + std::to_string(p));
    }
  }
  grid.clear_active();
  if (np == 0) {
    grid.lo.fill(0);
    grid.hi.fill(0);
    return;
  }
  grid.lo = lo;
  grid.hi = hi;

  const Real force_scale = -params.dt * 4.0 * inv_dx * inv_dx;
  scatter_particles<Dim, S>(state.x, inv_dx, grid.n, params.scatter, [&]<class Add>(long p) {
    const Stencil<Dim, S> st = make_stencil<Dim, S>(state.x[p], inv_dx);
    const S m = props.mass[p];
    const Mat<Dim, S> K = neo_hookean_kirchhoff<Dim, S>(state.F[p], props.lambda[p], props.mu[p]) +
                          actuation_kirchhoff<Dim, S>(state.F[p], u[p]);
    const Mat<Dim, S> A = (S(force_scale) * props.vol0[p]) * K + m * state.C[p];
    const Vec<Dim, S> mv = m * state.v[p];
    detail::for_each_offset<Dim>([&](const std::array<int, Dim>& o) {
      const S w = st.weight(o);
      const long f = grid.flat(add_offset<Dim>(st.base, o));
      Add::add(grid.mass[f], S(w * m));
      detail::add_vec<Add>(grid.momentum[f], Vec<Dim, S>(w * (mv + A * st.offset_position(o, dx))));
    });
  });
}

/// Branch ids reported by apply_boundary.
enum BoundaryBranch : int {
  kUntouched = 0,
  kSetToWall = 1,
  kSliding = 2,
  kSticky = 3,
};

/// Applies one rigid boundary rule to a grid velocity in place and returns the
/// branch taken.
template <int Dim, class S>
int apply_boundary(const BoundarySpec& b, Vec<Dim, S>& v, const Vec<Dim>& vr) {
  using std::sqrt;
  if (b.mode == BoundaryMode::kStickyAlways) {
    v = vr.template cast<S>();
    return kSticky;
  }
  const Vec<Dim> n = b.normal.head<Dim>().template cast<Real>();
  const Vec<Dim, S> rel = v - vr.template cast<S>();
  const S normal_speed = rel.dot(n.template cast<S>());
  if (!(value(normal_speed) < 0.0)) return kUntouched;
  if (b.mode == BoundaryMode::kNoSlip) {
    v = vr.template cast<S>();
    return kSetToWall;
  }
  const Vec<Dim, S> tangential = rel - normal_speed * n.template cast<S>();
  const S tnorm = sqrt(tangential.squaredNorm());
  // |v_rel,n| = -normal_speed on this branch
  const S slide = tnorm + S(b.friction) * normal_speed;
  if (!(value(tnorm) > 0.0) || !(value(slide) > 0.0)) {
    v = vr.template cast<S>();
    return kSetToWall;
  }
  v = vr.template cast<S>() + (slide / tnorm) * tangential;
  return kSliding;
}

/// Vector-Jacobian product of apply_boundary at input velocity v_in.
template <int Dim>
Vec<Dim> apply_boundary_backward(const BoundarySpec& b, const Vec<Dim>& v_in, const Vec<Dim>& vr,
                                 const Vec<Dim>& out_bar) {
  Vec<Dim> v = v_in;
  const int branch = apply_boundary<Dim, Real>(b, v, vr);
  if (branch == kUntouched) return out_bar;
  if (branch != kSliding) return Vec<Dim>::Zero();
  const Vec<Dim> n = b.normal.head<Dim>();
  const Vec<Dim> rel = v_in - vr;
  const Real a = rel.dot(n);
  const Vec<Dim> tangential = rel - a * n;
  const Real tnorm = tangential.norm();
  const Vec<Dim> that = tangential / tnorm;
  const Vec<Dim> proj_bar = out_bar - n * n.dot(out_bar);
  const Real t_dot = that.dot(out_bar);
  return proj_bar + b.friction * (n * t_dot + (a / tnorm) * (proj_bar - that * t_dot));
}

/// Grid momentum update: velocity = momentum/mass + dt g, then every boundary
/// whose region contains the node is applied in list order. Zero-mass nodes
/// are skipped and keep zero velocity. When `log` is given, nodes where a
/// boundary modified the velocity are folded into its fingerprint.
template <int Dim, class S>
void grid_update(GridField<Dim, S>& grid, const SimParams& params,
                 const std::vector<BoundarySpec>& boundaries, Real t, long step = 0,
                 BranchLog* log = nullptr) {
  const Vec<Dim> g = params.gravity.head<Dim>().template cast<Real>();
  std::vector<Vec<Dim>> wall_velocity;
  for (const auto& b : boundaries) wall_velocity.push_back(b.motion.at(t).head<Dim>());
  const long vol = grid.box_volume();
  std::uint64_t fp = 0;
  long active = 0;
  auto node_body = [&](long k, std::uint64_t& fp_acc, long& active_acc) {
    const auto idx = grid.box_index(k);
    const long f = grid.flat(idx);
    const S m = grid.mass[f];
    if (!(value(m) > 0.0)) {
      grid.velocity[f].setZero();
      return;
    }
    Vec<Dim, S> v = grid.momentum[f] / m + (params.dt * g).template cast<S>();
    for (std::size_t bi = 0; bi < boundaries.size(); ++bi) {
      const auto& b = boundaries[bi];
      if (!b.contains_node(idx[b.axis], params.dx)) continue;
      const int branch = apply_boundary<Dim, S>(b, v, wall_velocity[bi]);
      if (branch != kUntouched) {
        fp_acc += BranchLog::entry(step, f, static_cast<int>(bi), branch);
        ++active_acc;
      }
    }
    grid.velocity[f] = v;
  };
  if constexpr (std::is_floating_point_v<S>) {
#pragma omp parallel for schedule(static) reduction(+ : fp, active)
    for (long k = 0; k < vol; ++k) node_body(k, fp, active);
  } else {
    for (long k = 0; k < vol; ++k) node_body(k, fp, active);
  }
  if (log != nullptr) {
    log->fingerprint += fp;
    log->active_count += active;
  }
}

/// Adjoint of grid_update. Reads grid_adj.velocity (cotangent of the updated
/// velocity) and writes grid_adj.mass / grid_adj.momentum.
template <int Dim>
void grid_update_backward(const GridField<Dim>& grid, const SimParams& params,
                          const std::vector<BoundarySpec>& boundaries, Real t,
                          GridField<Dim>& grid_adj) {
  const Vec<Dim> g = params.gravity.head<Dim>().template cast<Real>();
  std::vector<Vec<Dim>> wall_velocity;
  for (const auto& b : boundaries) wall_velocity.push_back(b.motion.at(t).head<Dim>());
  const long vol = grid.box_volume();
#pragma omp parallel for schedule(static)
  for (long k = 0; k < vol; ++k) {
    const auto idx = grid.box_index(k);
    const long f = grid.flat(idx);
    const Real m = grid.mass[f];
    if (!(m > 0.0)) {
      grid_adj.mass[f] = 0.0;
      grid_adj.momentum[f].setZero();
      continue;
    }
    const Vec<Dim> v0 = grid.momentum[f] / m + params.dt * g;
    // Replay the boundary chain to recover each rule's input velocity.
    std::array<Vec<Dim>, 8> inputs;
    std::array<int, 8> which{};
    int count = 0;
    Vec<Dim> v = v0;
    for (std::size_t bi = 0; bi < boundaries.size(); ++bi) {
      const auto& b = boundaries[bi];
      if (!b.contains_node(idx[b.axis], params.dx)) continue;
      inputs[count] = v;
      which[count] = static_cast<int>(bi);
      ++count;
      apply_boundary<Dim, Real>(b, v, wall_velocity[bi]);
    }
    Vec<Dim> v_bar = grid_adj.velocity[f];
    for (int c = count - 1; c >= 0; --c) {
      v_bar = apply_boundary_backward<Dim>(boundaries[which[c]], inputs[c], wall_velocity[which[c]],
                                           v_bar);
    }
    grid_adj.momentum[f] = v_bar / m;
    grid_adj.mass[f] = -v_bar.dot(grid.momentum[f]) / (m * m);
  }
}

/// Result of a grid-to-particle transfer: index of the first particle that
/// violated the velocity bound or inverted, or -1.
struct G2PStatus {
  long bad_particle = -1;
  bool inverted = false;
};

/// Grid-to-particle transfer: velocity, affine matrix, advection and the
/// F <- (I + dt C) F update. `out` may alias `in`.
template <int Dim, class S>
G2PStatus g2p(const GridField<Dim, S>& grid, const ParticleState<Dim, S>& in,
              ParticleState<Dim, S>& out, const SimParams& params) {
  const long np = static_cast<long>(in.size());
  if (&out != &in) out.resize(np);
  const Real dx = params.dx;
  const Real inv_dx = 1.0 / dx;
  const Real c_scale = 4.0 * inv_dx * inv_dx;
  const Real vmax2 = params.blowup_velocity * params.blowup_velocity;
  long bad = np;
  bool inverted = false;
  auto body = [&](long p) {
    const Stencil<Dim, S> st = make_stencil<Dim, S>(in.x[p], inv_dx);
    Vec<Dim, S> v = Vec<Dim, S>::Zero();
    Mat<Dim, S> C = Mat<Dim, S>::Zero();
    detail::for_each_offset<Dim>([&](const std::array<int, Dim>& o) {
      const S w = st.weight(o);
      const Vec<Dim, S>& vi = grid.velocity[grid.flat(add_offset<Dim>(st.base, o))];
      v += w * vi;
      C += (S(c_scale) * w) * vi * st.offset_position(o, dx).transpose();
    });
    const Mat<Dim, S> F = (Mat<Dim, S>::Identity() + S(params.dt) * C) * in.F[p];
    out.x[p] = in.x[p] + S(params.dt) * v;
    out.v[p] = v;
    out.C[p] = C;
    out.F[p] = F;
    const bool fast = value(v.squaredNorm()) > vmax2;
    const bool inv = !(value(F.determinant()) > 0.0);
    return fast || inv ? (inv ? 2 : 1) : 0;
  };
  if constexpr (std::is_floating_point_v<S>) {
#pragma omp parallel for schedule(static) reduction(min : bad)
    for (long p = 0; p < np; ++p) {
      if (body(p) != 0) bad = std::min(bad, p);
    }
  } else {
    for (long p = 0; p < np; ++p) {
      if (body(p) != 0) bad = std::min(bad, p);
    }
  }
  G2PStatus status;
  if (bad < np) {
    status.bad_particle = bad;
    inverted = !(value(out.F[bad].determinant()) > 0.0);
    status.inverted = inverted;
  }
  return status;
}

/// Adjoint of g2p. `next` is the state produced by g2p from `prev` and
/// `adj_next` its cotangent. Writes the x and F cotangents of `prev` into
/// adj_prev (v and C are zeroed, since g2p does not read them) and the grid
/// velocity cotangent into grid_adj.velocity.
template <int Dim>
void g2p_backward(const GridField<Dim>& grid, const ParticleState<Dim>& prev,
                  const ParticleState<Dim>& next, const ParticleState<Dim>& adj_next,
                  GridField<Dim>& grid_adj, ParticleState<Dim>& adj_prev,
                  const SimParams& params) {
  const long np = static_cast<long>(prev.size());
  const Real dx = params.dx;
  const Real inv_dx = 1.0 / dx;
  const Real c_scale = 4.0 * inv_dx * inv_dx;
  const Real dt = params.dt;
  adj_prev.set_zero(np);
  grid_adj.lo = grid.lo;
  grid_adj.hi = grid.hi;
  grid_adj.for_each_active([&](long f) { grid_adj.velocity[f].setZero(); });

  scatter_particles<Dim, Real>(prev.x, inv_dx, grid.n, params.scatter, [&]<class Add>(long p) {
    const Stencil<Dim, Real> st = make_stencil<Dim, Real>(prev.x[p], inv_dx);
    const Mat<Dim> C_bar = adj_next.C[p] + dt * adj_next.F[p] * prev.F[p].transpose();
    const Vec<Dim> v_bar = adj_next.v[p] + dt * adj_next.x[p];
    Vec<Dim> x_bar = adj_next.x[p];
    detail::for_each_offset<Dim>([&](const std::array<int, Dim>& o) {
      const Real w = st.weight(o);
      const long f = grid.flat(add_offset<Dim>(st.base, o));
      const Vec<Dim>& vi = grid.velocity[f];
      const Vec<Dim> dpos = st.offset_position(o, dx);
      const Vec<Dim> C_dpos = C_bar * dpos;
      detail::add_vec<Add>(grid_adj.velocity[f], Vec<Dim>(w * v_bar + (c_scale * w) * C_dpos));
      const Real w_bar = vi.dot(v_bar) + c_scale * vi.dot(C_dpos);
      x_bar += w_bar * st.weight_grad(o, inv_dx) - (c_scale * w) * (C_bar.transpose() * vi);
    });
    adj_prev.x[p] = x_bar;
    adj_prev.F[p] = (Mat<Dim>::Identity() + dt * next.C[p]).transpose() * adj_next.F[p];
  });
}

/// Cotangents of the per-particle run constants.
struct PropsAdjoint {
  std::vector<Real> mass;
  std::vector<Real> lambda;
  std::vector<Real> mu;

  void reset(std::size_t n) {
    mass.assign(n, 0.0);
    lambda.assign(n, 0.0);
    mu.assign(n, 0.0);
  }
};

/// Adjoint of p2g. Gathers grid_adj.mass / grid_adj.momentum, accumulates the
/// state cotangents into adj, the constant cotangents into props_adj, and
/// writes the actuation cotangent per particle into u_bar.
template <int Dim>
void p2g_backward(const ParticleState<Dim>& state, const ParticleProps<Dim>& props,
                  const std::vector<Real>& u, const GridField<Dim>& grid_adj,
                  const SimParams& params, ParticleState<Dim>& adj, PropsAdjoint& props_adj,
                  std::vector<Real>& u_bar) {
  const long np = static_cast<long>(state.size());
  const Real dx = params.dx;
  const Real inv_dx = 1.0 / dx;
  const Real force_scale = -params.dt * 4.0 * inv_dx * inv_dx;
  u_bar.assign(np, 0.0);
#pragma omp parallel for schedule(static)
  for (long p = 0; p < np; ++p) {
    const Stencil<Dim, Real> st = make_stencil<Dim, Real>(state.x[p], inv_dx);
    const Real m = props.mass[p];
    const Mat<Dim>& F = state.F[p];
    const Mat<Dim> K = neo_hookean_kirchhoff<Dim, Real>(F, props.lambda[p], props.mu[p]) +
                       actuation_kirchhoff<Dim, Real>(F, u[p]);
    const Mat<Dim> A = (force_scale * props.vol0[p]) * K + m * state.C[p];
    const Vec<Dim> mv = m * state.v[p];
    Mat<Dim> A_bar = Mat<Dim>::Zero();
    Vec<Dim> x_bar = Vec<Dim>::Zero();
    Vec<Dim> mv_bar = Vec<Dim>::Zero();
    Real m_bar = 0.0;
    detail::for_each_offset<Dim>([&](const std::array<int, Dim>& o) {
      const Real w = st.weight(o);
      const long f = grid_adj.flat(add_offset<Dim>(st.base, o));
      const Real mass_bar = grid_adj.mass[f];
      const Vec<Dim>& mom_bar = grid_adj.momentum[f];
      const Vec<Dim> dpos = st.offset_position(o, dx);
      const Real w_bar = mass_bar * m + mom_bar.dot(mv + A * dpos);
      m_bar += w * mass_bar;
      mv_bar += w * mom_bar;
      A_bar += w * mom_bar * dpos.transpose();
      x_bar += w_bar * st.weight_grad(o, inv_dx) - w * (A.transpose() * mom_bar);
    });
    m_bar += mv_bar.dot(state.v[p]) + (A_bar.array() * state.C[p].array()).sum();
    adj.x[p] += x_bar;
    adj.v[p] += m * mv_bar;
    adj.C[p] += m * A_bar;
    const Mat<Dim> K_bar = (force_scale * props.vol0[p]) * A_bar;
    Mat<Dim> F_bar = Mat<Dim>::Zero();
    Real lambda_bar = 0.0;
    Real mu_bar = 0.0;
    Real ub = 0.0;
    combined_kirchhoff_backward<Dim>(F, props.lambda[p], props.mu[p], u[p], K_bar, F_bar,
                                     lambda_bar, mu_bar, ub);
    adj.F[p] += F_bar;
    props_adj.mass[p] += m_bar;
    props_adj.lambda[p] += lambda_bar;
    props_adj.mu[p] += mu_bar;
    u_bar[p] = ub;
  }
}

/// Reaction imparted by one boundary during the last grid_update: the sum over
/// its nodes of (updated momentum - momentum after gravity) / dt.
template <int Dim>
Vec<Dim> contact_force(const GridField<Dim>& grid, const BoundarySpec& b, const SimParams& params) {
  const Vec<Dim> g = params.gravity.head<Dim>();
  Vec<Dim> total = Vec<Dim>::Zero();
  const long vol = grid.box_volume();
  for (long k = 0; k < vol; ++k) {
    const auto idx = grid.box_index(k);
    if (!b.contains_node(idx[b.axis], params.dx)) continue;
    const long f = grid.flat(idx);
    const Real m = grid.mass[f];
    if (!(m > 0.0)) continue;
    const Vec<Dim> before = grid.momentum[f] + m * params.dt * g;
    total += (m * grid.velocity[f] - before) / params.dt;
  }
  return total;
}

}  // namespace softbody::sim
