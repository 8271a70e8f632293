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

#include "softbody/scenario/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#ifndef SOFTBODY_PRESET_DIR
#define SOFTBODY_PRESET_DIR "presets"
#endif

namespace softbody::scenario {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : -1; }

// Map accessor that rejects unknown keys.
class Table {
 public:
  Table(const YAML::Node& node, std::string where) : node_(node), where_(std::move(where)) {
    if (!node_.IsMap()) throw ConfigError(where_ + " must be a mapping", line_of(node_));
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node at(const std::string& key) {
    seen_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) throw ConfigError(fmt::format("{}: missing key '{}'", where_, key), line_of(node_));
    return n;
  }

  template <class T>
  T get(const std::string& key) {
    const YAML::Node n = at(key);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("{}.{}: wrong type", where_, key), line_of(n));
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T, std::size_t N>
  std::array<T, N> array(const std::string& key, std::size_t min_len, std::array<T, N> fill) {
    const YAML::Node n = at(key);
    if (!n.IsSequence() || n.size() < min_len || n.size() > N) {
      throw ConfigError(fmt::format("{}.{}: expected a list of {} to {} numbers", where_, key,
                                    min_len, N),
                        line_of(n));
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      try {
        fill[i] = n[i].as<T>();
      } catch (const YAML::Exception&) {
        throw ConfigError(fmt::format("{}.{}[{}]: wrong type", where_, key, i), line_of(n[i]));
      }
    }
    return fill;
  }

  Table sub(const std::string& key) { return Table(at(key), where_ + "." + key); }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string k = it->first.as<std::string>();
      if (!seen_.count(k)) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", where_, k), line_of(it->first));
      }
    }
  }

  const std::string& where() const { return where_; }
  int line() const { return line_of(node_); }

 private:
  YAML::Node node_;
  std::string where_;
  std::set<std::string> seen_;
};

Eigen::Vector3d to_vec3(const std::array<Real, 3>& a) { return {a[0], a[1], a[2]}; }

sim::BoundarySpec parse_boundary(Table t) {
  sim::BoundarySpec b;
  b.name = t.get<std::string>("name");
  b.axis = t.get<int>("axis");
  const std::string side = t.get<std::string>("side");
  if (side == "lower") {
    b.side = sim::BoundarySide::kLower;
  } else if (side == "upper") {
    b.side = sim::BoundarySide::kUpper;
  } else {
    throw ConfigError(t.where() + ".side: expected lower or upper", t.line());
  }
  b.plane = t.get<Real>("plane");
  try {
    b.mode = sim::boundary_mode_from_string(t.get<std::string>("mode"));
  } catch (const DomainError& e) {
    throw ConfigError(t.where() + ".mode: " + e.what(), t.line());
  }
  b.friction = t.get<Real>("friction", 0.0);
  if (t.has("motion")) {
    Table m = t.sub("motion");
    const std::string kind = m.get<std::string>("kind");
    if (kind == "constant") {
      b.motion.kind = sim::BoundaryMotion::Kind::kConstant;
      b.motion.velocity = to_vec3(m.array<Real, 3>("velocity", 1, {0.0, 0.0, 0.0}));
    } else if (kind == "sine") {
      b.motion.kind = sim::BoundaryMotion::Kind::kSine;
      b.motion.axis = m.get<int>("axis");
      b.motion.amplitude = m.get<Real>("amplitude");
      b.motion.omega = m.get<Real>("omega");
    } else {
      throw ConfigError(m.where() + ".kind: expected constant or sine", m.line());
    }
    m.finish();
  }
  t.finish();
  return b;
}

ScenarioConfig parse_root(const YAML::Node& root) {
  ScenarioConfig c;
  Table t(root, "config");
  c.name = t.get<std::string>("name", "custom");
  c.seed = t.get<std::uint64_t>("seed", 0);

  {
    Table s = t.sub("sim");
    c.sim.dim = s.get<int>("dim");
    c.sim.dx = s.get<Real>("dx");
    c.sim.dt = s.get<Real>("dt");
    c.sim.domain_length = s.get<Real>("domain_length");
    c.sim.total_time = s.get<Real>("total_time");
    c.sim.gravity = to_vec3(s.array<Real, 3>("gravity", 2, {0.0, 0.0, 0.0}));
    c.sim.frame_stride = s.get<long>("frame_stride", 0);
    const std::string scatter = s.get<std::string>("scatter", "deterministic");
    if (scatter == "deterministic") {
      c.sim.scatter = sim::ScatterMode::kDeterministic;
    } else if (scatter == "atomic") {
      c.sim.scatter = sim::ScatterMode::kAtomic;
    } else {
      throw ConfigError("sim.scatter: expected deterministic or atomic", s.line());
    }
    c.blowup_factor = s.get<Real>("blowup_factor", 100.0);
    s.finish();
  }
  {
    Table m = t.sub("material");
    c.mat.rho0 = m.get<Real>("rho0");
    c.mat.E0 = m.get<Real>("E0");
    c.mat.nu0 = m.get<Real>("nu0");
    c.mat.eps = m.get<Real>("eps");
    m.finish();
  }
  {
    Table d = t.sub("design_domain");
    c.design_domain.origin = d.array<Real, 3>("origin", 2, {0.0, 0.0, 0.0});
    c.design_domain.size = d.array<Real, 3>("size", 2, {0.0, 0.0, 0.0});
    d.finish();
  }
  {
    const YAML::Node list = t.at("boundaries");
    if (!list.IsSequence()) throw ConfigError("boundaries must be a list", line_of(list));
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.boundaries.push_back(parse_boundary(Table(list[i], fmt::format("boundaries[{}]", i))));
    }
  }
  c.n_act = t.get<int>("n_act");
  {
    Table k = t.sub("task");
    try {
      c.task.kind = losses::task_kind_from_string(k.get<std::string>("kind"));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("task.kind: ") + e.what(), k.line());
    }
    c.task.axis = to_vec3(k.array<Real, 3>("axis", 2, {0.0, 0.0, 0.0}));
    if (k.has("tolerances")) {
      c.task.tolerance = k.array<Real, 4>("tolerances", 4, {});
    } else {
      c.task.tolerance = losses::TaskSpec::default_tolerances(std::max(1, c.n_act));
    }
    k.finish();
  }
  {
    Table p = t.sub("pulse");
    c.pulse.A_pul = p.get<Real>("A_pul");
    c.pulse.sigma = p.get<Real>("sigma");
    c.pulse.spacing = p.get<Real>("spacing");
    c.pulse.A_act = p.get<Real>("A_act");
    c.pulse.truncation = p.get<Real>("truncation", 6.0);
    c.pulse.n_pul = p.has("n_pul") ? p.get<long>("n_pul")
                                   : std::lround(c.sim.total_time / c.pulse.spacing);
    p.finish();
  }
  {
    Table f = t.sub("filter");
    c.filter_radius_cells = f.get<Real>("radius_cells");
    c.filter_power = f.get<Real>("power");
    f.finish();
  }
  {
    Table p = t.sub("projection");
    c.map.beta_sig = p.get<Real>("beta_sig");
    c.map.beta_soft = p.get<Real>("beta_soft");
    p.finish();
  }
  if (t.has("optimizer")) {
    Table o = t.sub("optimizer");
    auto& s = c.optimizer;
    s.tau0 = o.get<Real>("tau0", s.tau0);
    s.c = o.get<Real>("c", s.c);
    s.a = o.get<Real>("a", s.a);
    s.step_size = o.get<Real>("step_size", s.step_size);
    s.beta1 = o.get<Real>("beta1", s.beta1);
    s.beta2 = o.get<Real>("beta2", s.beta2);
    s.eps = o.get<Real>("eps", s.eps);
    s.s_max = o.get<long>("s_max", s.s_max);
    s.window = o.get<int>("window", s.window);
    s.rel_tol = o.get<Real>("rel_tol", s.rel_tol);
    c.init_std = o.get<Real>("init_std", c.init_std);
    c.checkpoint_every = o.get<long>("checkpoint_every", c.checkpoint_every);
    c.segment_len = o.get<long>("segment_len", c.segment_len);
    o.finish();
  }
  if (t.has("hooks")) {
    Table h = t.sub("hooks");
    if (h.has("gravity_ramp")) {
      Table g = h.sub("gravity_ramp");
      c.gravity_ramp.enabled = g.get<bool>("enabled", true);
      c.gravity_ramp.increment = g.get<Real>("increment", c.gravity_ramp.increment);
      c.gravity_ramp.every = g.get<long>("every", c.gravity_ramp.every);
      c.gravity_ramp.target = g.get<Real>("target", c.gravity_ramp.target);
      g.finish();
    }
    h.finish();
  }
  c.signal_override = t.get<std::string>("signal_override", "");
  t.finish();
  return c;
}

std::string num(Real v) { return fmt::format("{:.17g}", v); }

std::string list(const Real* v, int n) {
  std::string s = "[";
  for (int i = 0; i < n; ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

std::string list3(const Eigen::Vector3d& v, int n) { return list(v.data(), n); }

}  // namespace

std::vector<std::string> preset_names() {
  return {"walker2d", "climber2d", "balancer2d", "walker3d", "rotator3d", "tiny", "mini_walker"};
}

std::string preset_dir() {
  if (const char* env = std::getenv("SOFTBODY_PRESET_DIR")) return env;
  return SOFTBODY_PRESET_DIR;
}

void finalize_and_validate(ScenarioConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  sim::SimParams& s = c.sim;
  if (s.dim != 2 && s.dim != 3) fail("sim.dim must be 2 or 3");
  if (!(s.dx > 0.0)) fail("sim.dx must be positive");
  if (!(s.dt > 0.0)) fail("sim.dt must be positive");
  if (!(s.total_time > 0.0)) fail("sim.total_time must be positive");
  if (!(s.domain_length > 4.0 * s.dx)) fail("sim.domain_length must span more than 4 cells");
  if (s.frame_stride < 0) fail("sim.frame_stride must be >= 0");
  if (!(c.blowup_factor > 0.0)) fail("sim.blowup_factor must be positive");
  s.finalize(c.blowup_factor);
  if (s.n_steps < 1) fail("n_steps = round(total_time / dt) must be >= 1");
  if (std::abs(s.nodes_per_axis * s.dx - s.domain_length) > 1e-9 * s.domain_length) {
    fail("sim.domain_length must be a whole number of cells");
  }

  try {
    c.mat = sim::MaterialConstants::from_elastic(c.mat.rho0, c.mat.E0, c.mat.nu0, c.mat.eps);
  } catch (const DomainError& e) {
    fail(std::string("material: ") + e.what());
  }
  if (!(c.mat.rho0 > 0.0)) fail("material.rho0 must be positive");
  if (!(c.mat.eps > 0.0 && c.mat.eps < 0.1)) fail("material.eps must lie in (0, 0.1)");
  const Real cfl = sim::cfl_max_dt(s, c.mat);
  if (s.dt > cfl) fail(fmt::format("sim.dt = {} exceeds the CFL bound {}", s.dt, cfl));
  c.map.eps = c.mat.eps;

  // Quadratic stencils reach one node below the base cell and two above.
  const Real lo = 2.0 * s.dx;
  const Real hi = (s.nodes_per_axis - 3) * s.dx;
  const Real h = 0.5 * s.dx;
  for (int a = 0; a < s.dim; ++a) {
    const Real o = c.design_domain.origin[a];
    const Real z = c.design_domain.size[a];
    if (!(z > 0.0)) fail(fmt::format("design_domain.size[{}] must be positive", a));
    if (std::lround(z / h) < 1) fail("design domain is smaller than one particle spacing");
    if (o < lo - 1e-12 || o + z > hi + 1e-12) {
      fail(fmt::format("design domain must stay inside the grid with a 2-cell margin "
                       "(axis {}: [{}, {}] not within [{}, {}])",
                       a, o, o + z, lo, hi));
    }
  }
  for (int a = s.dim; a < 3; ++a) {
    c.design_domain.origin[a] = 0.0;
    c.design_domain.size[a] = 0.0;
  }
  for (int a = s.dim; a < 3; ++a) s.gravity[a] = 0.0;

  std::set<std::string> names;
  for (auto& b : c.boundaries) {
    if (!names.insert(b.name).second) fail("duplicate boundary name '" + b.name + "'");
    if (b.axis < 0 || b.axis >= s.dim) fail("boundary '" + b.name + "': axis out of range");
    b.normal = Eigen::Vector3d::Zero();
    b.normal[b.axis] = b.side == sim::BoundarySide::kLower ? 1.0 : -1.0;
    if (b.plane < 0.0 || b.plane > s.domain_length) {
      fail("boundary '" + b.name + "': plane outside the grid");
    }
    if (b.motion.kind == sim::BoundaryMotion::Kind::kSine &&
        (b.motion.axis < 0 || b.motion.axis >= s.dim)) {
      fail("boundary '" + b.name + "': motion axis out of range");
    }
    try {
      b.validate(s.dim);
    } catch (const DomainError& e) {
      fail(e.what());
    }
  }

  if (c.n_act < 1) fail("n_act must be >= 1");
  if (c.task.kind == losses::TaskKind::kRotatorY && s.dim != 3) fail("rotator_y needs dim 3");
  if (c.task.kind == losses::TaskKind::kWalkerX || c.task.kind == losses::TaskKind::kClimberY) {
    if (std::abs(c.task.axis.head(s.dim).norm() - 1.0) > 1e-12) fail("task.axis must be unit");
  }
  for (int a = s.dim; a < 3; ++a) c.task.axis[a] = 0.0;
  for (Real tol : c.task.tolerance) {
    if (!(tol >= 0.0)) fail("task.tolerances must be >= 0");
  }

  if (!(c.pulse.sigma > 0.0)) fail("pulse.sigma must be positive");
  if (!(c.pulse.spacing > 0.0)) fail("pulse.spacing must be positive");
  if (c.pulse.n_pul < 1) fail("pulse.n_pul must be >= 1");
  if (!(c.pulse.A_act >= 0.0)) fail("pulse.A_act must be >= 0");
  if (!(c.pulse.truncation > 0.0)) fail("pulse.truncation must be positive");
  if (!(c.filter_radius_cells > 0.0)) fail("filter.radius_cells must be positive");
  if (!(c.filter_power > 0.0)) fail("filter.power must be positive");
  if (!(c.map.beta_sig > 0.0) || !(c.map.beta_soft > 0.0)) fail("projection betas must be positive");

  const auto& o = c.optimizer;
  if (!(o.tau0 > 0.0)) fail("optimizer.tau0 must be positive");
  if (!(o.c > 0.0 && o.c < 1.0)) fail("optimizer.c must lie in (0, 1)");
  if (!(o.a > 1.0)) fail("optimizer.a must exceed 1");
  if (!(o.step_size > 0.0)) fail("optimizer.step_size must be positive");
  if (o.s_max < 1) fail("optimizer.s_max must be >= 1");
  if (o.window < 1) fail("optimizer.window must be >= 1");
  if (!(c.init_std >= 0.0)) fail("optimizer.init_std must be >= 0");
  if (c.checkpoint_every < 1) fail("optimizer.checkpoint_every must be >= 1");
  if (c.segment_len < 0) fail("optimizer.segment_len must be >= 0");
  if (c.gravity_ramp.enabled && c.gravity_ramp.every < 1) fail("gravity_ramp.every must be >= 1");
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("YAML parse error: " + e.msg, e.mark.line >= 0 ? e.mark.line + 1 : -1);
  }
  ScenarioConfig c = parse_root(root);
  finalize_and_validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path_or_preset) {
  std::string path = path_or_preset;
  if (!std::filesystem::exists(path)) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), path_or_preset) == names.end()) {
      throw ConfigError("config file not found: " + path_or_preset);
    }
    path = preset_dir() + "/" + path_or_preset + ".yaml";
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string to_yaml(const ScenarioConfig& c) {
  const int d = c.sim.dim;
  std::string y;
  auto line = [&](const std::string& s) { y += s + "\n"; };
  line("name: " + c.name);
  line(fmt::format("seed: {}", c.seed));
  line("sim:");
  line(fmt::format("  dim: {}", d));
  line("  dx: " + num(c.sim.dx));
  line("  dt: " + num(c.sim.dt));
  line("  domain_length: " + num(c.sim.domain_length));
  line("  total_time: " + num(c.sim.total_time));
  line("  gravity: " + list3(c.sim.gravity, d));
  line(fmt::format("  frame_stride: {}", c.sim.frame_stride));
  line(std::string("  scatter: ") +
       (c.sim.scatter == sim::ScatterMode::kDeterministic ? "deterministic" : "atomic"));
  line("  blowup_factor: " + num(c.blowup_factor));
  line("material:");
  line("  rho0: " + num(c.mat.rho0));
  line("  E0: " + num(c.mat.E0));
  line("  nu0: " + num(c.mat.nu0));
  line("  eps: " + num(c.mat.eps));
  line("design_domain:");
  line("  origin: " + list(c.design_domain.origin.data(), d));
  line("  size: " + list(c.design_domain.size.data(), d));
  line("boundaries:");
  for (const auto& b : c.boundaries) {
    line("  - name: " + b.name);
    line(fmt::format("    axis: {}", b.axis));
    line(std::string("    side: ") + (b.side == sim::BoundarySide::kLower ? "lower" : "upper"));
    line("    plane: " + num(b.plane));
    line("    mode: " + sim::to_string(b.mode));
    line("    friction: " + num(b.friction));
    line("    motion:");
    if (b.motion.kind == sim::BoundaryMotion::Kind::kConstant) {
      line("      kind: constant");
      line("      velocity: " + list3(b.motion.velocity, d));
    } else {
      line("      kind: sine");
      line(fmt::format("      axis: {}", b.motion.axis));
      line("      amplitude: " + num(b.motion.amplitude));
      line("      omega: " + num(b.motion.omega));
    }
  }
  line(fmt::format("n_act: {}", c.n_act));
  line("task:");
  line("  kind: " + losses::to_string(c.task.kind));
  line("  axis: " + list3(c.task.axis, d));
  line("  tolerances: " + list(c.task.tolerance.data(), 4));
  line("pulse:");
  line("  A_pul: " + num(c.pulse.A_pul));
  line("  sigma: " + num(c.pulse.sigma));
  line("  spacing: " + num(c.pulse.spacing));
  line(fmt::format("  n_pul: {}", c.pulse.n_pul));
  line("  A_act: " + num(c.pulse.A_act));
  line("  truncation: " + num(c.pulse.truncation));
  line("filter:");
  line("  radius_cells: " + num(c.filter_radius_cells));
  line("  power: " + num(c.filter_power));
  line("projection:");
  line("  beta_sig: " + num(c.map.beta_sig));
  line("  beta_soft: " + num(c.map.beta_soft));
  line("optimizer:");
  line("  tau0: " + num(c.optimizer.tau0));
  line("  c: " + num(c.optimizer.c));
  line("  a: " + num(c.optimizer.a));
  line("  step_size: " + num(c.optimizer.step_size));
  line("  beta1: " + num(c.optimizer.beta1));
  line("  beta2: " + num(c.optimizer.beta2));
  line("  eps: " + num(c.optimizer.eps));
  line(fmt::format("  s_max: {}", c.optimizer.s_max));
  line(fmt::format("  window: {}", c.optimizer.window));
  line("  rel_tol: " + num(c.optimizer.rel_tol));
  line("  init_std: " + num(c.init_std));
  line(fmt::format("  checkpoint_every: {}", c.checkpoint_every));
  line(fmt::format("  segment_len: {}", c.segment_len));
  line("hooks:");
  line("  gravity_ramp:");
  line(fmt::format("    enabled: {}", c.gravity_ramp.enabled));
  line("    increment: " + num(c.gravity_ramp.increment));
  line(fmt::format("    every: {}", c.gravity_ramp.every));
  line("    target: " + num(c.gravity_ramp.target));
  if (!c.signal_override.empty()) line("signal_override: \"" + c.signal_override + "\"");
  return y;
}

void save_config(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path);
  out << to_yaml(config);
}

}  // namespace softbody::scenario
