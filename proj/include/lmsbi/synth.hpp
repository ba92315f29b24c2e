/* Copyright 2026 The lmsbi Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "lmsbi/market.hpp"

#include <cstdint>

namespace lmsbi {

struct SynthConfig {
  Index occupations = 10;
  std::int64_t workers_per_occupation = 100;
  // 0 selects round(sqrt(n)) blocks.
  Index block_count = 0;
  double intra_block_mass = 0.8;
  double smoothing_epsilon = 1e-3;
  double p_max = 0.9;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

/// Number of blocks actually used for cfg (resolves the automatic default).
Index resolved_block_count(const SynthConfig& cfg);

/// Block index of each occupation: contiguous equal blocks, remainder
/// occupations joining the last block.
Eigen::VectorXi block_assignment(Index occupations, Index blocks);

/// Synthetic market with uniform workforce, p_i ~ U[0, p_max] and a
/// block-patterned transition matrix smoothed by an additive epsilon.
MarketSpec generate_market(const SynthConfig& cfg);

}  // namespace lmsbi
