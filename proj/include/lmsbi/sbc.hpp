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

#include "lmsbi/abc.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace lmsbi {

/// (observation, draws, seed) -> D x draws posterior samples.
using PosteriorFactory = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& observation, Index draws, std::uint64_t seed)>;

struct SbcConfig {
  Index trials = 300;
  Index draws = 100;  // L
  Index bins = 20;
  double coverage = 0.99;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

void validate(const SbcConfig& cfg);

struct SbcParameter {
  std::string name;
  std::vector<Index> ranks;   // one per completed trial, in [0, L]
  std::vector<Index> counts;  // per bin
  double chi_square = 0;
  double p_value = 1;
  Index bins_outside_band = 0;

  double fraction_within_band() const {
    return counts.empty() ? 0.0 : 1.0 - static_cast<double>(bins_outside_band) / static_cast<double>(counts.size());
  }
};

struct SbcReport {
  std::vector<SbcParameter> parameters;
  std::vector<std::pair<Index, Index>> band;  // per bin
  Index trials = 0;
  Index completed = 0;
  Index skipped = 0;
  std::vector<std::string> skip_reasons;  // one per skipped trial, "trial <i>: <message>"
  Index draws = 0;
  Index bins = 0;
  double coverage = 0.99;
};

/// Per trial: theta ~ prior, y ~ simulator(theta), L posterior draws given y,
/// rank = #draws below theta per component. Ranks are binned through
/// (rank + U) / (L + 1) with U ~ Uniform(0, 1), which is exactly uniform under
/// calibration for any L and bin count. Failed trials are skipped and counted.
SbcReport run_sbc(const PriorSampler& prior, const Simulator& simulator, const PosteriorFactory& posterior,
                  const SbcConfig& cfg, std::vector<std::string> names = {"delta_u", "delta_v", "r"});

/// Central `coverage` interval of Binomial(n, 1 / bins), identical for every bin.
std::vector<std::pair<Index, Index>> uniformity_band(Index n, Index bins, double coverage = 0.99);

/// Smallest k with P(Binomial(n, p) <= k) >= q.
Index binomial_quantile(Index n, double p, double q);

/// Upper tail probability of a chi-square variate.
double chi_square_survival(double statistic, double dof);

/// Pearson statistic and p-value of counts against a uniform expectation.
std::pair<double, double> chi_square_uniform(const std::vector<Index>& counts);

void write_json(std::ostream& out, const SbcReport& report);
/// parameter,rank_bin,count,band_low,band_high
void write_histogram_csv(std::ostream& out, const SbcReport& report);

}  // namespace lmsbi
