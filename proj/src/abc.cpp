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

#include "lmsbi/abc.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace lmsbi {

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

}  // namespace

PriorSampler box_sampler(PriorBox prior) {
  validate(prior);
  return [prior = std::move(prior)](Index count, std::uint64_t seed) { return sample_prior(prior, count, seed); };
}

void validate(const AbcConfig& cfg) {
  if (cfg.draws < 1) throw ValidationError("ABC needs at least one draw");
  if (cfg.epsilon && !(*cfg.epsilon >= 0.0)) throw ValidationError("ABC epsilon must be non-negative");
  if (!(cfg.quantile > 0.0 && cfg.quantile <= 1.0)) throw ValidationError("ABC quantile must lie in (0, 1]");
}

Eigen::VectorXd median_absolute_deviation(const Eigen::MatrixXd& columns) {
  Eigen::VectorXd out(columns.rows());
  std::vector<double> row(static_cast<std::size_t>(columns.cols()));
  for (Index k = 0; k < columns.rows(); ++k) {
    for (Index j = 0; j < columns.cols(); ++j) row[static_cast<std::size_t>(j)] = columns(k, j);
    const double m = median(row);
    for (double& x : row) x = std::abs(x - m);
    out(k) = median(row);
  }
  return out;
}

AbcResult rejection_abc(const PriorSampler& prior, const Simulator& simulator, const SummaryFn& summary,
                        const Eigen::MatrixXd& observation, const AbcConfig& cfg) {
  validate(cfg);
  const Eigen::VectorXd target = summary(observation);
  if (!target.allFinite()) throw NumericError("observed summary is not finite");

  AbcResult result;
  result.draws = cfg.draws;
  result.theta = prior(cfg.draws, stream_seed(cfg.seed, 0));
  // Only summaries are kept, so large trajectories never accumulate.
  Simulator summarized = [&](const Eigen::VectorXd& theta, std::uint64_t seed) -> Eigen::MatrixXd {
    return summary(simulator(theta, seed));
  };
  const SimulationBatch batch = run_simulation_batch(summarized, result.theta, {stream_seed(cfg.seed, 1), cfg.workers, {}});

  std::vector<Index> ok;
  for (Index i = 0; i < batch.size(); ++i) {
    const auto& s = batch.observations[static_cast<std::size_t>(i)];
    if (batch.errors[static_cast<std::size_t>(i)].empty() && s.size() == target.size() && s.allFinite())
      ok.push_back(i);
  }
  result.failed = cfg.draws - static_cast<Index>(ok.size());
  if (ok.empty()) throw NumericError("every ABC simulation failed");

  Eigen::MatrixXd sims(target.size(), static_cast<Index>(ok.size()));
  for (std::size_t j = 0; j < ok.size(); ++j)
    sims.col(static_cast<Index>(j)) = batch.observations[static_cast<std::size_t>(ok[j])].reshaped();

  Eigen::VectorXd spread;
  if (cfg.scale == DistanceScale::mad) {
    spread = median_absolute_deviation(sims);
  } else {
    const Eigen::VectorXd mean = sims.rowwise().mean();
    spread = ((sims.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(sims.cols())).sqrt();
  }
  // Components with no spread in the batch are compared on the raw scale.
  for (Index k = 0; k < spread.size(); ++k)
    if (!(spread(k) > 0.0)) spread(k) = 1.0;
  result.scale = spread;

  result.all_distances = Eigen::VectorXd::Constant(cfg.draws, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < ok.size(); ++j)
    result.all_distances(ok[j]) = ((sims.col(static_cast<Index>(j)) - target).array() / spread.array()).matrix().norm();

  std::vector<Index> keep;
  if (cfg.epsilon) {
    result.threshold = *cfg.epsilon;
    for (Index i : ok)
      if (result.all_distances(i) <= result.threshold) keep.push_back(i);
    if (keep.empty())
      throw NumericError("no draws accepted at epsilon " + std::to_string(*cfg.epsilon) +
                         "; use quantile acceptance instead");
  } else {
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.quantile * static_cast<double>(ok.size()) - 1e-9)));
    std::vector<Index> order = ok;
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return result.all_distances(a) < result.all_distances(b); });
    keep.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, order.size())));
    result.threshold = result.all_distances(keep.back());
    std::sort(keep.begin(), keep.end());
  }

  result.accepted.resize(result.theta.rows(), static_cast<Index>(keep.size()));
  result.distances.resize(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    result.accepted.col(static_cast<Index>(j)) = result.theta.col(keep[j]);
    result.distances(static_cast<Index>(j)) = result.all_distances(keep[j]);
  }
  result.accepted_index = std::move(keep);
  return result;
}

void write_csv(std::ostream& out, const AbcResult& result, const std::vector<std::string>& names) {
  if (static_cast<Index>(names.size()) != result.accepted.rows()) throw ValidationError("column name count mismatch");
  const auto old = out.precision(17);
  for (const auto& n : names) out << n << ',';
  out << "distance\n";
  for (Index j = 0; j < result.accepted.cols(); ++j) {
    for (Index k = 0; k < result.accepted.rows(); ++k) out << result.accepted(k, j) << ',';
    out << result.distances(j) << '\n';
  }
  out.precision(old);
}

}  // namespace lmsbi
