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

// Scenario configuration: YAML schema, presets and validation. The schema is
// documented in docs/config.md.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "softbody/common.hpp"
#include "softbody/design/design.hpp"
#include "softbody/losses/losses.hpp"
#include "softbody/optimizer/al_optimizer.hpp"
#include "softbody/sim/params.hpp"

namespace softbody::scenario {

/// Axis-aligned box of the design domain. Only the first dim entries are used.
struct DesignDomain {
  std::array<Real, 3> origin{0.0, 0.0, 0.0};
  std::array<Real, 3> size{0.0, 0.0, 0.0};

  bool operator==(const DesignDomain&) const = default;
};

/// Gravity break-in: |g| = min(target, increment * floor(s / every)).
struct GravityRamp {
  bool enabled = false;
  Real increment = 0.98;
  long every = 20;
  Real target = 9.8;

  bool operator==(const GravityRamp&) const = default;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 0;
  sim::SimParams sim;
  Real blowup_factor = 100.0;
  sim::MaterialConstants mat;
  DesignDomain design_domain;
  std::vector<sim::BoundarySpec> boundaries;
  losses::TaskSpec task;
  design::PulseParams pulse;
  Real filter_radius_cells = 1.5;  // R_f in units of dx
  Real filter_power = 2.0;
  design::DesignMapParams map;
  int n_act = 4;
  optimizer::OptimizerSettings optimizer;
  Real init_std = 0.1;              // std of the initial A_sgn, A_abs entries
  long checkpoint_every = 10;       // optimizer iterations between checkpoint writes
  long segment_len = 0;             // reverse-sweep segment, 0 = round(sqrt(N))
  GravityRamp gravity_ramp;
  std::string signal_override;      // CSV path, empty when unused

  bool operator==(const ScenarioConfig&) const = default;
};

/// Names of the shipped preset files.
std::vector<std::string> preset_names();

/// Directory holding the preset files; SOFTBODY_PRESET_DIR overrides.
std::string preset_dir();

/// Parses a YAML document. Throws ConfigError with a line number on parse
/// or schema errors, and with the violated invariant on validation errors.
ScenarioConfig parse_config(const std::string& text);

/// Loads a config file, or a preset when `path_or_preset` names one.
ScenarioConfig load_config(const std::string& path_or_preset);

/// Serializes with round-trip precision.
std::string to_yaml(const ScenarioConfig& config);
void save_config(const ScenarioConfig& config, const std::string& path);

/// Fills derived fields (Lame constants, node count, step count, boundary
/// normals) and checks all invariants. Throws ConfigError.
void finalize_and_validate(ScenarioConfig& config);

}  // namespace softbody::scenario
