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

#include "lmsbi/synth.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/rng.hpp"

#include <algorithm>
#include <cmath>

namespace lmsbi {

Index resolved_block_count(const SynthConfig& cfg) {
  if (cfg.block_count > 0) return cfg.block_count;
  const auto b = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(cfg.occupations))));
  return std::clamp<Index>(b, 1, std::max<Index>(cfg.occupations, 1));
}

void validate(const SynthConfig& cfg) {
  if (cfg.occupations < 1) throw ValidationError("synthetic market needs at least one occupation");
  if (cfg.workers_per_occupation < 1) throw ValidationError("workers per occupation must be >= 1");
  if (cfg.block_count < 0 || cfg.block_count > cfg.occupations)
    throw ValidationError("block count must lie in [1, n]");
  if (!(cfg.intra_block_mass > 0.0 && cfg.intra_block_mass < 1.0))
    throw ValidationError("intra-block mass must lie in (0, 1)");
  if (!(cfg.smoothing_epsilon >= 0.0) || !std::isfinite(cfg.smoothing_epsilon))
    throw ValidationError("smoothing epsilon must be finite and non-negative");
  if (!(cfg.p_max >= 0.0 && cfg.p_max <= 1.0)) throw ValidationError("p_max must lie in [0, 1]");
}

Eigen::VectorXi block_assignment(Index occupations, Index blocks) {
  const Index size = occupations / blocks;
  Eigen::VectorXi out(occupations);
  for (Index i = 0; i < occupations; ++i) out(i) = static_cast<int>(std::min(i / size, blocks - 1));
  return out;
}

MarketSpec generate_market(const SynthConfig& cfg) {
  validate(cfg);
  const Index n = cfg.occupations;
  const Index blocks = resolved_block_count(cfg);
  const Eigen::VectorXi block = block_assignment(n, blocks);
  Eigen::VectorXi block_size = Eigen::VectorXi::Zero(blocks);
  for (Index i = 0; i < n; ++i) ++block_size(block(i));

  MarketSpec spec;
  spec.workforce = VectorXc::Constant(n, cfg.workers_per_occupation);

  Rng rng = make_rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  spec.automation_prob.resize(n);
  for (Index i = 0; i < n; ++i) spec.automation_prob(i) = cfg.p_max * unit(rng);

  spec.transition.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    const Index inside = block_size(block(i));
    const Index outside = n - inside;
    // Without off-block occupations the whole row stays in the block.
    const double intra = outside == 0 ? 1.0 : cfg.intra_block_mass;
    for (Index j = 0; j < n; ++j) {
      spec.transition(i, j) = block(i) == block(j) ? intra / static_cast<double>(inside)
                                                   : (1.0 - intra) / static_cast<double>(outside);
    }
  }
  spec.transition.array() += cfg.smoothing_epsilon;
  for (Index i = 0; i < n; ++i) spec.transition.row(i) /= spec.transition.row(i).sum();
  return spec;
}

}  // namespace lmsbi
