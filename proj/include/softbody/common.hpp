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

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace softbody {

#ifdef SOFTBODY_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

template <int Dim, class S = Real>
using Vec = Eigen::Matrix<S, Dim, 1>;
template <int Dim, class S = Real>
using Mat = Eigen::Matrix<S, Dim, Dim>;

using VectorX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatrixX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// Primal value of a scalar; overloaded for the tangent type in dual.hpp.
inline double value(double x) { return x; }
inline float value(float x) { return x; }

/// Raised when an input lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when array shapes handed to an operation do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the forward simulation diverges or inverts an element.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Raised when an adjoint quantity becomes NaN or infinite.
class NonFiniteAdjointError : public std::runtime_error {
 public:
  NonFiniteAdjointError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Raised for malformed or invalid scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")"
                                     : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace softbody
