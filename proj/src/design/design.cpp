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

#include "softbody/design/design.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/os.h>

namespace softbody::design {

DesignVariables DesignVariables::zeros(long n_par, int n_act, long n_pul) {
  DesignVariables v;
  v.phi = VectorX::Zero(n_par);
  v.Z = MatrixX::Zero(n_act + 1, n_par);
  v.A_sgn = MatrixX::Zero(n_pul, n_act);
  v.A_abs = MatrixX::Zero(n_pul, n_act);
  return v;
}

VectorX DesignVariables::flatten() const {
  VectorX flat(size());
  long o = 0;
  flat.segment(o, phi.size()) = phi;
  o += phi.size();
  flat.segment(o, Z.size()) = Z.reshaped();
  o += Z.size();
  flat.segment(o, A_sgn.size()) = A_sgn.reshaped();
  o += A_sgn.size();
  flat.segment(o, A_abs.size()) = A_abs.reshaped();
  return flat;
}

void DesignVariables::unflatten(const VectorX& flat) {
  if (flat.size() != size()) throw ShapeError("DesignVariables::unflatten: size mismatch");
  long o = 0;
  phi = flat.segment(o, phi.size());
  o += phi.size();
  Z.reshaped() = flat.segment(o, Z.size());
  o += Z.size();
  A_sgn.reshaped() = flat.segment(o, A_sgn.size());
  o += A_sgn.size();
  A_abs.reshaped() = flat.segment(o, A_abs.size());
}

void DesignVariables::check_shapes() const {
  if (Z.cols() != phi.size() || Z.rows() != A_sgn.cols() + 1 || A_sgn.rows() != A_abs.rows() ||
      A_sgn.cols() != A_abs.cols()) {
    throw ShapeError("design variables have inconsistent shapes");
  }
}

std::array<BlockRange, 4> block_ranges(const DesignVariables& vars) {
  const long a = vars.phi.size();
  const long b = a + vars.Z.size();
  const long c = b + vars.A_sgn.size();
  const long d = c + vars.A_abs.size();
  return {BlockRange{"phi", 0, a}, BlockRange{"Z", a, b}, BlockRange{"A_sgn", b, c},
          BlockRange{"A_abs", c, d}};
}

Real FilterSpec::weight(Real r, Real radius, Real power) {
  return std::pow(1.0 - std::min(r, radius) / radius, power);
}

FilterSpec::FilterSpec(const MatrixX& positions, Real radius, Real power)
    : radius_(radius), power_(power) {
  if (!(radius > 0.0)) throw DomainError("filter radius must be positive");
  const long n = positions.rows();
  const int dim = static_cast<int>(positions.cols());
  // Bin reference positions into cubes of side R; neighbors lie in the 3^d
  // surrounding bins.
  using Key = std::array<long, 3>;
  auto key_of = [&](long i) {
    Key k{0, 0, 0};
    for (int a = 0; a < dim; ++a) k[a] = static_cast<long>(std::floor(positions(i, a) / radius));
    return k;
  };
  std::map<Key, std::vector<long>> bins;
  for (long i = 0; i < n; ++i) bins[key_of(i)].push_back(i);
  offsets_.assign(1, 0);
  row_sum_.assign(n, 0.0);
  std::vector<std::pair<long, Real>> row;
  for (long i = 0; i < n; ++i) {
    row.clear();
    const Key ki = key_of(i);
    const int span_z = dim == 3 ? 1 : 0;
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dz = -span_z; dz <= span_z; ++dz) {
          const auto it = bins.find(Key{ki[0] + dx, ki[1] + dy, ki[2] + dz});
          if (it == bins.end()) continue;
          for (long j : it->second) {
            const Real r = (positions.row(i) - positions.row(j)).norm();
            if (r < radius) row.emplace_back(j, weight(r, radius, power));
          }
        }
      }
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, w] : row) {
      neighbors_.push_back(j);
      weights_.push_back(w);
      row_sum_[i] += w;
    }
    offsets_.push_back(static_cast<long>(neighbors_.size()));
  }
}

VectorX filter_field_backward(const VectorX& out_bar, const FilterSpec& spec) {
  if (out_bar.size() != spec.size()) throw ShapeError("filter_field_backward: size mismatch");
  VectorX in_bar = VectorX::Zero(out_bar.size());
  for (long i = 0; i < spec.size(); ++i) {
    const Real g = out_bar[i] / spec.row_sum(i);
    for (long k = spec.begin(i); k < spec.end(i); ++k) {
      in_bar[spec.neighbor(k)] += spec.weight_at(k) * g;
    }
  }
  return in_bar;
}

MatrixX filter_rows_backward(const MatrixX& out_bar, const FilterSpec& spec) {
  MatrixX in_bar(out_bar.rows(), out_bar.cols());
  for (long r = 0; r < out_bar.rows(); ++r) {
    in_bar.row(r) = filter_field_backward(out_bar.row(r).transpose(), spec).transpose();
  }
  return in_bar;
}

Real sigmoid_project_derivative(Real phi_tilde, Real beta) {
  const Real t = std::tanh(beta * phi_tilde);
  return 0.5 * beta * (1.0 - t * t) / std::tanh(beta);
}

VectorX softmax_project_backward(const VectorX& xi, const VectorX& xi_bar, Real beta) {
  return beta * (xi.array() * (xi_bar.array() - xi.dot(xi_bar))).matrix();
}

std::pair<long, long> pulse_window(Real t, const PulseParams& pulse) {
  const Real reach = pulse.truncation * pulse.sigma;
  long first = static_cast<long>(std::ceil((t - reach) / pulse.spacing));
  long last = static_cast<long>(std::floor((t + reach) / pulse.spacing)) + 1;
  first = std::clamp(first, 0L, pulse.n_pul);
  last = std::clamp(last, first, pulse.n_pul);
  return {first, last};
}

InterpolatedMaterial material_interpolation(Real gamma, const sim::MaterialConstants& mat) {
  const Real f = material_factor<Real>(gamma, mat.eps);
  return {f * mat.rho0, f * mat.lambda0, f * mat.mu0};
}

DerivedDesign derive_design(const DesignVariables& vars, const FilterSpec& filter,
                            const PulseParams& pulse, const sim::SimParams& params,
                            const DesignMapParams& map) {
  return derive_design<Real>(vars.phi, vars.Z, vars.A_sgn, vars.A_abs, filter, pulse, params, map);
}

void DerivedDesignAdjoint::reset(const DerivedDesign& d) {
  gamma = VectorX::Zero(d.gamma.size());
  xi = MatrixX::Zero(d.xi.rows(), d.xi.cols());
  u_hat = MatrixX::Zero(d.u_hat.rows(), d.u_hat.cols());
}

VectorX actuation_signal_backward(const VectorX& alpha, const VectorX& u_hat_bar, Real dt,
                                  const PulseParams& pulse) {
  VectorX alpha_bar = VectorX::Zero(alpha.size());
  const Real inv_two_s2 = 1.0 / (2.0 * pulse.sigma * pulse.sigma);
  for (long k = 0; k < u_hat_bar.size(); ++k) {
    if (u_hat_bar[k] == 0.0) continue;
    const Real t = static_cast<Real>(k) * dt;
    const auto [first, last] = pulse_window(t, pulse);
    Real acc = 0.0;
    for (long l = first; l < last; ++l) {
      const Real d = static_cast<Real>(l) * pulse.spacing - t;
      acc += alpha[l] * (pulse.A_pul * std::exp(-d * d * inv_two_s2));
    }
    const Real th = std::tanh(acc);
    const Real acc_bar = u_hat_bar[k] * pulse.A_act * (1.0 - th * th);
    for (long l = first; l < last; ++l) {
      const Real d = static_cast<Real>(l) * pulse.spacing - t;
      alpha_bar[l] += acc_bar * (pulse.A_pul * std::exp(-d * d * inv_two_s2));
    }
  }
  return alpha_bar;
}

DesignVariables derive_design_backward(const DesignVariables& vars, const DerivedDesign& derived,
                                       const DerivedDesignAdjoint& adj, const FilterSpec& filter,
                                       const PulseParams& pulse, const sim::SimParams& params,
                                       const DesignMapParams& map) {
  DesignVariables g = DesignVariables::zeros(vars.n_par(), vars.n_act(), vars.n_pul());
  VectorX phi_tilde_bar(vars.n_par());
  for (long i = 0; i < vars.n_par(); ++i) {
    phi_tilde_bar[i] = adj.gamma[i] * sigmoid_project_derivative(derived.phi_tilde[i], map.beta_sig);
  }
  g.phi = filter_field_backward(phi_tilde_bar, filter);

  MatrixX zeta_bar(derived.xi.rows(), derived.xi.cols());
  for (long i = 0; i < derived.xi.cols(); ++i) {
    zeta_bar.col(i) = softmax_project_backward(derived.xi.col(i), adj.xi.col(i), map.beta_soft);
  }
  g.Z = filter_rows_backward(zeta_bar, filter);

  for (int j = 0; j < vars.n_act(); ++j) {
    const VectorX alpha_bar =
        actuation_signal_backward(derived.alpha.col(j), adj.u_hat.col(j), params.dt, pulse);
    for (long k = 0; k < vars.n_pul(); ++k) {
      g.A_sgn(k, j) = alpha_bar[k] * 0.5 * (vars.A_abs(k, j) + 1.0);
      g.A_abs(k, j) = alpha_bar[k] * 0.5 * vars.A_sgn(k, j);
    }
  }
  return g;
}

template <int Dim>
void assign_properties(const DerivedDesign& derived, const sim::MaterialConstants& mat,
                       const std::vector<int>& design_index, Real vol0,
                       sim::ParticleProps<Dim>& props, sim::Actuation& act) {
  const long np = static_cast<long>(design_index.size());
  props.mass.resize(np);
  props.vol0.assign(np, vol0);
  props.lambda.resize(np);
  props.mu.resize(np);
  props.design_index = design_index;
  act.weights.resize(np, derived.xi.rows());
  act.scale.resize(np);
  for (long p = 0; p < np; ++p) {
    const int d = design_index[p];
    const Real gamma = derived.gamma[d];
    const Real f = material_factor<Real>(gamma, mat.eps);
    props.mass[p] = f * mat.rho0 * vol0;
    props.lambda[p] = f * mat.lambda0;
    props.mu[p] = f * mat.mu0;
    act.weights.row(p) = derived.xi.col(d).transpose();
    act.scale[p] = actuation_factor<Real>(gamma, mat.eps);
  }
  act.signal = derived.u_hat;
}

template <int Dim>
void assign_properties_backward(const sim::MaterialConstants& mat,
                                const sim::ParticleProps<Dim>& props,
                                const sim::PropsAdjoint& props_adj, Real vol0,
                                VectorX& gamma_bar) {
  const Real s = 1.0 - mat.eps;
  for (std::size_t p = 0; p < props.size(); ++p) {
    gamma_bar[props.design_index[p]] +=
        s * (mat.rho0 * vol0 * props_adj.mass[p] + mat.lambda0 * props_adj.lambda[p] +
             mat.mu0 * props_adj.mu[p]);
  }
}

void particle_actuation_backward(const DerivedDesign& derived, const std::vector<int>& design_index,
                                 long k, const std::vector<Real>& u_bar, Real eps,
                                 DerivedDesignAdjoint& adj) {
  const auto u_row = derived.u_hat.row(k);
  for (std::size_t p = 0; p < design_index.size(); ++p) {
    if (u_bar[p] == 0.0) continue;
    const int d = design_index[p];
    const Real gamma = derived.gamma[d];
    const Real pen = actuation_factor<Real>(gamma, eps);
    const Real mix = derived.xi.col(d).dot(u_row.transpose());
    adj.gamma[d] += u_bar[p] * 3.0 * (1.0 - eps) * gamma * gamma * mix;
    adj.xi.col(d) += (u_bar[p] * pen) * u_row.transpose();
    adj.u_hat.row(k) += (u_bar[p] * pen) * derived.xi.col(d).transpose();
  }
}

Real round_pulse(Real alpha) {
  if (std::abs(alpha) < 0.5) return 0.0;
  return alpha > 0.0 ? 1.0 : -1.0;
}

DerivedDesign binarize_postprocess(const DerivedDesign& derived, const PulseParams& pulse,
                                   const sim::SimParams& params) {
  DerivedDesign b = derived;
  for (long i = 0; i < b.gamma.size(); ++i) b.gamma[i] = b.gamma[i] >= 0.5 ? 1.0 : 0.0;
  const auto top = actuator_argmax(derived);
  b.xi.setZero();
  for (long i = 0; i < b.xi.cols(); ++i) b.xi(top[i], i) = 1.0;
  for (long k = 0; k < b.alpha.size(); ++k) b.alpha(k) = round_pulse(b.alpha(k));
  b.u_hat.setZero();
  for (long j = 0; j + 1 < b.u_hat.cols(); ++j) {
    const VectorX a = b.alpha.col(j);
    for (long k = 0; k < b.u_hat.rows(); ++k) {
      b.u_hat(k, j) = actuation_signal<Real>(a, static_cast<Real>(k) * params.dt, pulse);
    }
  }
  return b;
}

DesignVariables binarize_variables(const DesignVariables& vars) {
  DesignVariables b = vars;
  for (long k = 0; k < vars.A_sgn.size(); ++k) {
    const Real alpha = combine_pulse<Real>(vars.A_sgn(k), vars.A_abs(k));
    const Real r = round_pulse(alpha);
    if (r != 0.0) {
      b.A_sgn(k) = r;
      b.A_abs(k) = 1.0;
    } else {
      b.A_sgn(k) = vars.A_sgn(k) < 0.0 ? -1.0 : 1.0;
      b.A_abs(k) = -1.0;
    }
  }
  return b;
}

std::vector<int> solid_particles(const DerivedDesign& derived) {
  std::vector<int> idx;
  for (long i = 0; i < derived.gamma.size(); ++i) {
    if (derived.gamma[i] >= 0.5) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

void apply_signal_override(DerivedDesign& derived, const MatrixX& table,
                           const sim::SimParams& params) {
  const long n_act = derived.u_hat.cols() - 1;
  if (table.cols() != n_act + 1) {
    throw ShapeError(fmt::format("signal table has {} actuator columns, expected {}",
                                 table.cols() - 1, n_act));
  }
  if (table.rows() < 1) throw ShapeError("signal table is empty");
  for (long r = 1; r < table.rows(); ++r) {
    if (!(table(r, 0) > table(r - 1, 0))) throw ShapeError("signal table times must increase");
  }
  const long n_rows = table.rows();
  for (long k = 0; k < derived.u_hat.rows(); ++k) {
    const Real t = static_cast<Real>(k) * params.dt;
    long r = 0;
    while (r + 1 < n_rows && table(r + 1, 0) <= t) ++r;
    for (long j = 0; j < n_act; ++j) {
      Real v;
      if (t <= table(0, 0)) {
        v = table(0, j + 1);
      } else if (r + 1 >= n_rows) {
        v = table(n_rows - 1, j + 1);
      } else {
        const Real s = (t - table(r, 0)) / (table(r + 1, 0) - table(r, 0));
        v = (1.0 - s) * table(r, j + 1) + s * table(r + 1, j + 1);
      }
      derived.u_hat(k, j) = v;
    }
    derived.u_hat(k, n_act) = 0.0;
  }
}

std::vector<int> actuator_argmax(const DerivedDesign& derived) {
  std::vector<int> top(derived.xi.cols());
  for (long i = 0; i < derived.xi.cols(); ++i) {
    Eigen::Index j = 0;
    derived.xi.col(i).maxCoeff(&j);
    top[i] = static_cast<int>(j);
  }
  return top;
}

void write_layout_csv(const DerivedDesign& derived, const MatrixX& positions,
                      const std::string& path) {
  if (positions.rows() != derived.gamma.size()) throw ShapeError("layout: position count mismatch");
  auto out = fmt::output_file(path);
  const char* axes[] = {"px", "py", "pz"};
  for (long a = 0; a < positions.cols(); ++a) out.print("{},", axes[a]);
  out.print("gamma,actuator_argmax");
  for (long j = 0; j < derived.xi.rows(); ++j) out.print(",xi_{}", j);
  out.print("\n");
  const auto top = actuator_argmax(derived);
  for (long i = 0; i < positions.rows(); ++i) {
    for (long a = 0; a < positions.cols(); ++a) out.print("{:.17g},", positions(i, a));
    out.print("{:.17g},{}", derived.gamma[i], top[i]);
    for (long j = 0; j < derived.xi.rows(); ++j) out.print(",{:.17g}", derived.xi(j, i));
    out.print("\n");
  }
}

void write_signals_csv(const DerivedDesign& derived, Real dt, const std::string& path) {
  auto out = fmt::output_file(path);
  out.print("t");
  const long n_act = derived.u_hat.cols() - 1;
  for (long j = 0; j < n_act; ++j) out.print(",u_{}", j + 1);
  out.print("\n");
  for (long k = 0; k < derived.u_hat.rows(); ++k) {
    out.print("{:.17g}", static_cast<Real>(k) * dt);
    for (long j = 0; j < n_act; ++j) out.print(",{:.17g}", derived.u_hat(k, j));
    out.print("\n");
  }
}

MatrixX read_signals_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ShapeError("signal table has no header: " + path);
  const long cols = std::count(line.begin(), line.end(), ',') + 1;
  if (line.rfind("t", 0) != 0 || cols < 2) {
    throw ShapeError("signal table header must be t,u_1..u_N: " + path);
  }
  std::vector<Real> data;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    long c = 0;
    while (std::getline(ss, cell, ',')) {
      data.push_back(std::stod(cell));
      ++c;
    }
    if (c != cols) throw ShapeError(fmt::format("{}: row {} has {} columns", path, rows + 2, c));
    ++rows;
  }
  MatrixX table(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) table(r, c) = data[r * cols + c];
  }
  return table;
}

template void assign_properties<2>(const DerivedDesign&, const sim::MaterialConstants&,
                                   const std::vector<int>&, Real, sim::ParticleProps<2>&,
                                   sim::Actuation&);
template void assign_properties<3>(const DerivedDesign&, const sim::MaterialConstants&,
                                   const std::vector<int>&, Real, sim::ParticleProps<3>&,
                                   sim::Actuation&);
template void assign_properties_backward<2>(const sim::MaterialConstants&,
                                            const sim::ParticleProps<2>&, const sim::PropsAdjoint&,
                                            Real, VectorX&);
template void assign_properties_backward<3>(const sim::MaterialConstants&,
                                            const sim::ParticleProps<3>&, const sim::PropsAdjoint&,
                                            Real, VectorX&);

}  // namespace softbody::design
