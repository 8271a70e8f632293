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

// Kirchhoff-type stress matrices entering the MLS-MPM force, and their
// reverse-mode partials.

#pragma once

#include <cmath>

#include "softbody/common.hpp"

namespace softbody::sim {

/// Neo-Hookean Kirchhoff stress  mu (F F^T - I) + lambda log(det F) I.
/// Throws DomainError when det F <= 0.
template <int Dim, class S>
Mat<Dim, S> neo_hookean_kirchhoff(const Mat<Dim, S>& F, const S& lambda, const S& mu) {
  using std::log;
  const S J = F.determinant();
  if (!(value(J) > 0.0)) throw DomainError("deformation gradient is singular or inverted");
  const Mat<Dim, S> I = Mat<Dim, S>::Identity();
  return mu * (F * F.transpose() - I) + (lambda * log(J)) * I;
}

/// Actuation stress  -u F S F^T  with S the identity.
template <int Dim, class S>
Mat<Dim, S> actuation_kirchhoff(const Mat<Dim, S>& F, const S& u) {
  return -u * (F * F.transpose());
}

/// Reverse-mode partials of the summed stress
///   K = neo_hookean_kirchhoff(F, lambda, mu) + actuation_kirchhoff(F, u)
/// given the cotangent K_bar. Results are accumulated into the outputs.
template <int Dim>
void combined_kirchhoff_backward(const Mat<Dim>& F, Real lambda, Real mu, Real u,
                                 const Mat<Dim>& K_bar, Mat<Dim>& F_bar, Real& lambda_bar,
                                 Real& mu_bar, Real& u_bar) {
  const Real J = F.determinant();
  const Mat<Dim> FFt = F * F.transpose();
  const Real trace_bar = K_bar.trace();
  mu_bar += (K_bar.array() * (FFt - Mat<Dim>::Identity()).array()).sum();
  lambda_bar += std::log(J) * trace_bar;
  u_bar -= (K_bar.array() * FFt.array()).sum();
  F_bar += (mu - u) * (K_bar + K_bar.transpose()) * F +
           (lambda * trace_bar) * F.inverse().transpose();
}

}  // namespace softbody::sim
