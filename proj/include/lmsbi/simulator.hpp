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
#include "lmsbi/rng.hpp"

#include <cstdint>

namespace lmsbi {

/// e = z, u = 0, v = 0, d = e.
MarketState init_state(const MarketSpec& spec);

/// Target labour demand at step t. Before the shock this is the workforce z;
/// after it the demand is reweighted by (1 - p_i) and rescaled so that total
/// demand is unchanged. Sigmoid mode blends the two with a logistic ramp.
Eigen::VectorXd target_demand(const MarketSpec& spec, int t, const SimulationConfig& cfg);

struct StepResult {
  MarketState state;
  MatrixXc transitions;
  VectorXc separations;  // workers moved from e_i to u_i this step
  VectorXc openings;     // vacancies opened in i this step
};

/// One update: separations, vacancy openings, then matching of the
/// unemployed to open vacancies through the application network.
StepResult step(const MarketState& state, const MarketSpec& spec, const BehaviouralParams& params,
                const Eigen::Ref<const Eigen::VectorXd>& demand, const SimulationConfig& cfg, Rng& rng);

MacroTrajectory simulate(const MarketSpec& spec, const BehaviouralParams& params,
                         const SimulationConfig& cfg);

/// Same as simulate() while recording J_t. Refuses with ResourceError when
/// the float64 storage estimate exceeds cfg.micro_budget_bytes.
MicroTrajectory simulate_micro(const MarketSpec& spec, const BehaviouralParams& params,
                               const SimulationConfig& cfg);

/// sims * steps * n * (n + 4) * bytes_per_element, throwing on overflow.
std::uint64_t micro_memory_estimate(std::uint64_t sims, std::uint64_t steps, std::uint64_t occupations,
                                    std::uint64_t bytes_per_element);

namespace detail {

/// Number of successes when drawing `draws` items without replacement from
/// `successes + failures` items.
std::int64_t sample_hypergeometric(Rng& rng, std::int64_t successes, std::int64_t failures,
                                   std::int64_t draws);

}  // namespace detail

}  // namespace lmsbi
