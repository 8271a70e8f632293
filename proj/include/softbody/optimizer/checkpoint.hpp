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

// Binary optimizer checkpoints. All reals are stored bit-exactly.

#pragma once

#include <string>
#include <vector>

#include "softbody/optimizer/al_optimizer.hpp"

namespace softbody::optimizer {

struct OptimizerCheckpoint {
  VectorX x;
  AdamState adam;
  ALState al;
  std::vector<LogRow> log;
  std::string rng_state;  // opaque, e.g. a streamed std::mt19937_64
  std::string tag;        // scenario identifier checked on resume
};

OptimizerCheckpoint make_checkpoint(const ALOptimizer& opt, std::string rng_state,
                                    std::string tag);

/// Writes atomically (temp file + rename).
void save_checkpoint(const OptimizerCheckpoint& ckpt, const std::string& path);

/// Throws std::runtime_error on a missing, truncated or foreign file.
OptimizerCheckpoint load_checkpoint(const std::string& path);

/// Restores x, Adam, AL state and log into opt.
void restore_checkpoint(ALOptimizer& opt, const OptimizerCheckpoint& ckpt);

}  // namespace softbody::optimizer
