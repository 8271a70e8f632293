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

#include "softbody/optimizer/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace softbody::optimizer {

namespace {

constexpr char kMagic[4] = {'S', 'B', '4', 'D'};
constexpr std::int32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void real(Real v) { pod<double>(static_cast<double>(v)); }
  void reals(const std::vector<Real>& v) {
    pod<std::int64_t>(static_cast<std::int64_t>(v.size()));
    for (Real r : v) real(r);
  }
  void vec(const VectorX& v) {
    pod<std::int64_t>(v.size());
    for (long i = 0; i < v.size(); ++i) real(v[i]);
  }
  void str(const std::string& s) {
    pod<std::int64_t>(static_cast<std::int64_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}
  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw std::runtime_error("checkpoint is truncated");
    return v;
  }
  Real real() { return static_cast<Real>(pod<double>()); }
  std::int64_t count() {
    const auto n = pod<std::int64_t>();
    if (n < 0 || n > (std::int64_t{1} << 40)) throw std::runtime_error("checkpoint is corrupt");
    return n;
  }
  std::vector<Real> reals() {
    std::vector<Real> v(count());
    for (Real& r : v) r = real();
    return v;
  }
  VectorX vec() {
    VectorX v(count());
    for (long i = 0; i < v.size(); ++i) v[i] = real();
    return v;
  }
  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) throw std::runtime_error("checkpoint is truncated");
    return s;
  }

 private:
  std::ifstream& in_;
};

}  // namespace

OptimizerCheckpoint make_checkpoint(const ALOptimizer& opt, std::string rng_state,
                                    std::string tag) {
  OptimizerCheckpoint c;
  c.x = opt.x();
  c.adam = opt.adam();
  c.al = opt.al();
  c.log = opt.log();
  c.rng_state = std::move(rng_state);
  c.tag = std::move(tag);
  return c;
}

void save_checkpoint(const OptimizerCheckpoint& c, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    Writer w(out);
    out.write(kMagic, 4);
    w.pod(kVersion);
    w.str(c.tag);
    w.str(c.rng_state);
    w.vec(c.x);
    w.vec(c.adam.m);
    w.vec(c.adam.v);
    w.pod<std::int64_t>(c.adam.step_count);
    w.real(c.adam.step_size);
    w.real(c.adam.beta1);
    w.real(c.adam.beta2);
    w.real(c.adam.eps);
    w.reals(c.al.kappa);
    w.reals(c.al.tau);
    w.reals(c.al.v_prev);
    w.pod<std::int64_t>(c.al.s);
    w.pod<std::int64_t>(c.al.outer);
    w.pod<std::uint8_t>(c.al.inner_active);
    w.pod<std::uint8_t>(c.al.finished);
    w.pod<std::uint8_t>(c.al.feasible);
    w.reals(c.al.history);
    w.pod<std::int64_t>(static_cast<std::int64_t>(c.log.size()));
    for (const auto& row : c.log) {
      w.pod<std::int64_t>(row.iter);
      w.real(row.objective);
      w.real(row.task_loss);
      w.reals(row.constraint_values);
      w.reals(row.kappa);
      w.reals(row.tau);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

OptimizerCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  Reader r(in);
  if (r.pod<std::int32_t>() != kVersion) throw std::runtime_error("unsupported checkpoint version");
  OptimizerCheckpoint c;
  c.tag = r.str();
  c.rng_state = r.str();
  c.x = r.vec();
  c.adam.m = r.vec();
  c.adam.v = r.vec();
  c.adam.step_count = r.pod<std::int64_t>();
  c.adam.step_size = r.real();
  c.adam.beta1 = r.real();
  c.adam.beta2 = r.real();
  c.adam.eps = r.real();
  c.al.kappa = r.reals();
  c.al.tau = r.reals();
  c.al.v_prev = r.reals();
  c.al.s = r.pod<std::int64_t>();
  c.al.outer = r.pod<std::int64_t>();
  c.al.inner_active = r.pod<std::uint8_t>() != 0;
  c.al.finished = r.pod<std::uint8_t>() != 0;
  c.al.feasible = r.pod<std::uint8_t>() != 0;
  c.al.history = r.reals();
  const auto rows = r.count();
  c.log.resize(rows);
  for (auto& row : c.log) {
    row.iter = r.pod<std::int64_t>();
    row.objective = r.real();
    row.task_loss = r.real();
    row.constraint_values = r.reals();
    row.kappa = r.reals();
    row.tau = r.reals();
  }
  return c;
}

void restore_checkpoint(ALOptimizer& opt, const OptimizerCheckpoint& c) {
  opt.restore(c.x, c.adam, c.al, c.log);
}

}  // namespace softbody::optimizer
