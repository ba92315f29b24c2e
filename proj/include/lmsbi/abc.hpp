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

#include "lmsbi/pipeline.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmsbi {

/// (count, seed) -> D x count prior draws.
using PriorSampler = std::function<Eigen::MatrixXd(Index count, std::uint64_t seed)>;
/// observation -> summary vector.
using SummaryFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd& observation)>;

PriorSampler box_sampler(PriorBox prior);

enum class DistanceScale { mad, std };

struct AbcConfig {
  Index draws = 10000;
  // Fixed threshold; when unset the top `quantile` fraction of draws is kept.
  std::optional<double> epsilon;
  double quantile = 0.01;
  DistanceScale scale = DistanceScale::mad;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

void validate(const AbcConfig& cfg);

struct AbcResult {
  Eigen::MatrixXd accepted;       // D x K, in draw order
  Eigen::VectorXd distances;      // K
  std::vector<Index> accepted_index;  // draw index of each accepted column
  double threshold = 0;
  Index draws = 0;
  Index failed = 0;               // simulations that raised errors
  Eigen::VectorXd scale;          // per-component summary scale
  Eigen::MatrixXd theta;          // every prior draw, D x N
  Eigen::VectorXd all_distances;  // N, NaN for failed simulations
};

/// Prior draws are simulated, summarized and compared with summary(y) under a
/// Euclidean distance on scaled summaries; the scale is the per-component
/// median absolute deviation (or standard deviation) of the simulated batch.
AbcResult rejection_abc(const PriorSampler& prior, const Simulator& simulator, const SummaryFn& summary,
                        const Eigen::MatrixXd& observation, const AbcConfig& cfg);

/// CSV with the parameter columns plus a trailing distance column.
void write_csv(std::ostream& out, const AbcResult& result,
               const std::vector<std::string>& names = {"delta_u", "delta_v", "r"});

/// Median of |x - median(x)| for each row.
Eigen::VectorXd median_absolute_deviation(const Eigen::MatrixXd& columns);

}  // namespace lmsbi
