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

// Design variables and the maps from them to physical fields: filtered and
// projected material density, actuator weights, pulse densities and the
// continuous actuation signals. Forward maps are templated on the scalar so
// the tangent type yields exact directional derivatives; reverse maps are
// double-only.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "softbody/common.hpp"
#include "softbody/sim/params.hpp"
#include "softbody/sim/simulator.hpp"

namespace softbody::design {

template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// The optimized unknowns. Columns of Z index particles, rows index the
/// actuator channels with the last row the "no actuator" channel.
struct DesignVariables {
  VectorX phi;    // N_par, in [-1, 1]
  MatrixX Z;      // (N_act + 1) x N_par, unbounded
  MatrixX A_sgn;  // N_pul x N_act, in [-1, 1]
  MatrixX A_abs;  // N_pul x N_act, in [-1, 1]

  static DesignVariables zeros(long n_par, int n_act, long n_pul);

  long n_par() const { return phi.size(); }
  int n_act() const { return static_cast<int>(A_sgn.cols()); }
  long n_pul() const { return A_sgn.rows(); }

  /// Flat layout: phi, Z (column-major), A_sgn (column-major), A_abs.
  long size() const { return phi.size() + Z.size() + A_sgn.size() + A_abs.size(); }
  VectorX flatten() const;
  void unflatten(const VectorX& flat);
  /// Throws ShapeError when the blocks are mutually inconsistent.
  void check_shapes() const;

  bool operator==(const DesignVariables& o) const {
    return phi == o.phi && Z == o.Z && A_sgn == o.A_sgn && A_abs == o.A_abs;
  }
};

/// Named block of the flat layout.
struct BlockRange {
  std::string name;
  long begin;
  long end;
};
std::array<BlockRange, 4> block_ranges(const DesignVariables& vars);

/// Particle-wise distance filter over fixed reference positions.
/// Stored as a symmetric neighbor table (self included) in CSR form.
class FilterSpec {
 public:
  FilterSpec() = default;
  /// positions: one row per particle.
  FilterSpec(const MatrixX& positions, Real radius, Real power);

  /// (1 - min(r, R)/R)^p
  static Real weight(Real r, Real radius, Real power);

  Real radius() const { return radius_; }
  Real power() const { return power_; }
  long size() const { return static_cast<long>(offsets_.size()) - 1; }
  long begin(long i) const { return offsets_[i]; }
  long end(long i) const { return offsets_[i + 1]; }
  long neighbor(long k) const { return neighbors_[k]; }
  Real weight_at(long k) const { return weights_[k]; }
  Real row_sum(long i) const { return row_sum_[i]; }

 private:
  Real radius_ = 0.0;
  Real power_ = 1.0;
  std::vector<long> offsets_{0};
  std::vector<long> neighbors_;
  std::vector<Real> weights_;
  std::vector<Real> row_sum_;
};

/// Normalized weighted average of per-particle values.
template <class S>
VecX<S> filter_field(const VecX<S>& values, const FilterSpec& spec) {
  if (values.size() != spec.size()) throw ShapeError("filter_field: size mismatch");
  VecX<S> out(values.size());
  for (long i = 0; i < spec.size(); ++i) {
    S acc = S(0.0);
    for (long k = spec.begin(i); k < spec.end(i); ++k) {
      acc += spec.weight_at(k) * values[spec.neighbor(k)];
    }
    out[i] = acc / spec.row_sum(i);
  }
  return out;
}

/// Filters every row of a channels x particles matrix.
template <class S>
MatX<S> filter_rows(const MatX<S>& values, const FilterSpec& spec) {
  MatX<S> out(values.rows(), values.cols());
  for (long r = 0; r < values.rows(); ++r) {
    out.row(r) = filter_field<S>(VecX<S>(values.row(r).transpose()), spec).transpose();
  }
  return out;
}

VectorX filter_field_backward(const VectorX& out_bar, const FilterSpec& spec);
MatrixX filter_rows_backward(const MatrixX& out_bar, const FilterSpec& spec);

/// 0.5 (tanh(beta phi) / tanh(beta) + 1)
template <class S>
S sigmoid_project(const S& phi_tilde, Real beta) {
  using std::tanh;
  return S(0.5) * (tanh(beta * phi_tilde) / std::tanh(beta) + S(1.0));
}
Real sigmoid_project_derivative(Real phi_tilde, Real beta);

/// Softmax of beta * zeta with max subtraction.
template <class S>
VecX<S> softmax_project(const VecX<S>& zeta_tilde, Real beta) {
  using std::exp;
  if (zeta_tilde.size() == 0) return zeta_tilde;
  S top = zeta_tilde[0];
  for (long j = 1; j < zeta_tilde.size(); ++j) {
    if (value(zeta_tilde[j]) > value(top)) top = zeta_tilde[j];
  }
  VecX<S> e(zeta_tilde.size());
  S sum = S(0.0);
  for (long j = 0; j < zeta_tilde.size(); ++j) {
    e[j] = exp(beta * (zeta_tilde[j] - top));
    sum += e[j];
  }
  return e / sum;
}
/// Reverse of softmax_project given its output xi.
VectorX softmax_project_backward(const VectorX& xi, const VectorX& xi_bar, Real beta);

/// alpha = a_sgn (a_abs + 1) / 2
template <class S>
S combine_pulse(const S& a_sgn, const S& a_abs) {
  return a_sgn * (a_abs + S(1.0)) * S(0.5);
}

/// Gaussian pulse train parameters.
struct PulseParams {
  Real A_pul = 0.2;
  Real sigma = 0.01;     // s
  Real spacing = 0.002;  // s
  long n_pul = 250;
  Real A_act = 1e4;  // Pa
  Real truncation = 6.0;  // pulses farther than this many sigma are skipped

  bool operator==(const PulseParams&) const = default;
};

/// Pulse slots within truncation range of time t: [first, last).
std::pair<long, long> pulse_window(Real t, const PulseParams& pulse);

/// u_hat(t) = A_act tanh(sum_k alpha_k A_pul exp(-(t_k - t)^2 / (2 sigma^2))), t_k = k spacing.
template <class S>
S actuation_signal(const VecX<S>& alpha, Real t, const PulseParams& pulse) {
  using std::tanh;
  const auto [first, last] = pulse_window(t, pulse);
  S acc = S(0.0);
  for (long k = first; k < last; ++k) {
    const Real d = static_cast<Real>(k) * pulse.spacing - t;
    acc += alpha[k] * (pulse.A_pul * std::exp(-d * d / (2.0 * pulse.sigma * pulse.sigma)));
  }
  return pulse.A_act * tanh(acc);
}

/// ((1 - eps) gamma + eps) scale of the solid properties.
template <class S>
S material_factor(const S& gamma, Real eps) {
  return (1.0 - eps) * gamma + eps;
}

struct InterpolatedMaterial {
  Real rho;
  Real lambda;
  Real mu;
};
InterpolatedMaterial material_interpolation(Real gamma, const sim::MaterialConstants& mat);

/// ((1 - eps) gamma^3 + eps)
template <class S>
S actuation_factor(const S& gamma, Real eps) {
  return (1.0 - eps) * gamma * gamma * gamma + eps;
}

/// ((1 - eps) gamma^3 + eps) xi . u_hat
template <class S>
S particle_actuation(const S& gamma, const VecX<S>& xi, const VecX<S>& u_hat_at_t, Real eps) {
  return actuation_factor<S>(gamma, eps) * xi.dot(u_hat_at_t);
}

/// Parameters of the design map other than the pulse train.
struct DesignMapParams {
  Real beta_sig = 4.0;
  Real beta_soft = 4.0;
  Real eps = 1e-5;

  bool operator==(const DesignMapParams&) const = default;
};

/// Output of derive_design.
template <class S>
struct DerivedDesignT {
  VecX<S> phi_tilde;  // filtered phi
  VecX<S> gamma;      // N_par
  MatX<S> xi;         // (N_act + 1) x N_par
  MatX<S> alpha;      // N_pul x N_act
  MatX<S> u_hat;      // (n_steps + 1) x (N_act + 1), last column zero
};
using DerivedDesign = DerivedDesignT<Real>;

/// Filter -> sigmoid on phi, row filter -> column softmax on Z, pulse
/// combination, and signal sampling at t_k = k dt for k = 0..n_steps.
template <class S>
DerivedDesignT<S> derive_design(const VecX<S>& phi, const MatX<S>& Z, const MatX<S>& A_sgn,
                                const MatX<S>& A_abs, const FilterSpec& filter,
                                const PulseParams& pulse, const sim::SimParams& params,
                                const DesignMapParams& map) {
  const long n_par = phi.size();
  const long n_ch = Z.rows();
  if (Z.cols() != n_par || A_sgn.rows() != A_abs.rows() || A_sgn.cols() != A_abs.cols() ||
      A_sgn.cols() + 1 != n_ch || filter.size() != n_par || A_sgn.rows() != pulse.n_pul) {
    throw ShapeError("derive_design: inconsistent design variable shapes");
  }
  DerivedDesignT<S> d;
  d.phi_tilde = filter_field<S>(phi, filter);
  d.gamma.resize(n_par);
  for (long i = 0; i < n_par; ++i) d.gamma[i] = sigmoid_project<S>(d.phi_tilde[i], map.beta_sig);
  const MatX<S> zeta = filter_rows<S>(Z, filter);
  d.xi.resize(n_ch, n_par);
  for (long i = 0; i < n_par; ++i) {
    d.xi.col(i) = softmax_project<S>(VecX<S>(zeta.col(i)), map.beta_soft);
  }
  d.alpha.resize(A_sgn.rows(), A_sgn.cols());
  for (long k = 0; k < A_sgn.size(); ++k) d.alpha(k) = combine_pulse<S>(A_sgn(k), A_abs(k));
  d.u_hat = MatX<S>::Zero(params.n_steps + 1, n_ch);
  for (long j = 0; j + 1 < n_ch; ++j) {
    const VecX<S> a = d.alpha.col(j);
    for (long k = 0; k <= params.n_steps; ++k) {
      d.u_hat(k, j) = actuation_signal<S>(a, static_cast<Real>(k) * params.dt, pulse);
    }
  }
  return d;
}

DerivedDesign derive_design(const DesignVariables& vars, const FilterSpec& filter,
                            const PulseParams& pulse, const sim::SimParams& params,
                            const DesignMapParams& map);

/// Cotangents of the derived fields.
struct DerivedDesignAdjoint {
  VectorX gamma;  // N_par
  MatrixX xi;     // (N_act + 1) x N_par
  MatrixX u_hat;  // (n_steps + 1) x (N_act + 1)

  void reset(const DerivedDesign& d);
};

/// Pulls derived-field cotangents back to the design variables.
DesignVariables derive_design_backward(const DesignVariables& vars, const DerivedDesign& derived,
                                       const DerivedDesignAdjoint& adj, const FilterSpec& filter,
                                       const PulseParams& pulse, const sim::SimParams& params,
                                       const DesignMapParams& map);

/// Reverse of the signal sampling for one channel: alpha_bar from u_hat_bar
/// at t_k = k dt.
VectorX actuation_signal_backward(const VectorX& alpha, const VectorX& u_hat_bar, Real dt,
                                  const PulseParams& pulse);

/// Maps of simulated particles onto design columns and the run constants.
template <int Dim>
struct Body {
  sim::ParticleState<Dim> initial;
  sim::ParticleProps<Dim> props;
  sim::Actuation actuation;
};

/// Builds per-particle constants and the actuation table for the simulated
/// particles. `design_index[p]` selects the design column of particle p and
/// `vol0` is the particle volume.
template <int Dim>
void assign_properties(const DerivedDesign& derived, const sim::MaterialConstants& mat,
                       const std::vector<int>& design_index, Real vol0,
                       sim::ParticleProps<Dim>& props, sim::Actuation& act);

/// Adds the cotangent of per-particle mass / lambda / mu into gamma_bar.
template <int Dim>
void assign_properties_backward(const sim::MaterialConstants& mat,
                                const sim::ParticleProps<Dim>& props,
                                const sim::PropsAdjoint& props_adj, Real vol0,
                                VectorX& gamma_bar);

/// Adds the cotangent of u_p(t_k), p over simulated particles, into the
/// derived-field cotangents.
void particle_actuation_backward(const DerivedDesign& derived, const std::vector<int>& design_index,
                                 long k, const std::vector<Real>& u_bar, Real eps,
                                 DerivedDesignAdjoint& adj);

/// Thresholded design: gamma at 0.5, xi one-hot at argmax, alpha rounded to
/// {-1, 0, 1}. Signals are resampled from the rounded alpha.
DerivedDesign binarize_postprocess(const DerivedDesign& derived, const PulseParams& pulse,
                                   const sim::SimParams& params);

/// Pulse variables at their binary corners, reproducing the rounded alpha of
/// binarize_postprocess: A_sgn -> +-1 by sign, A_abs -> +1 where |alpha|
/// rounds to 1 and -1 where it rounds to 0. phi and Z are copied.
DesignVariables binarize_variables(const DesignVariables& vars);

/// alpha rounded to the nearest of {-1, 0, 1}.
Real round_pulse(Real alpha);

/// Indices of particles with gamma >= 0.5 (the solid set of a binarized design).
std::vector<int> solid_particles(const DerivedDesign& derived);

/// Replaces the actuator signals with a table sampled at arbitrary times,
/// linearly interpolated onto t_k = k dt. Columns of `table` are t, u_1..u_N.
void apply_signal_override(DerivedDesign& derived, const MatrixX& table,
                           const sim::SimParams& params);

/// Actuator index (0-based) with the largest weight per particle; N_act means
/// "no actuator".
std::vector<int> actuator_argmax(const DerivedDesign& derived);

/// `px,py[,pz],gamma,actuator_argmax,xi_0..xi_N`
void write_layout_csv(const DerivedDesign& derived, const MatrixX& positions,
                      const std::string& path);
/// `t,u_1..u_N`
void write_signals_csv(const DerivedDesign& derived, Real dt, const std::string& path);
/// Reads a `t,u_1..u_N` table.
MatrixX read_signals_csv(const std::string& path);

}  // namespace softbody::design
