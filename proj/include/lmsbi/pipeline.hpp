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

#include "lmsbi/estimator.hpp"
#include "lmsbi/market.hpp"
#include "lmsbi/summaries.hpp"
#include "lmsbi/train.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace lmsbi {

/// Independent uniform prior on a box.
struct PriorBox {
  Eigen::VectorXd lower, upper;

  /// delta_u, delta_v in [0, 0.02]; r in [0, 1].
  static PriorBox defaults();
  /// Unbounded support of the given dimension.
  static PriorBox unbounded(Index dim);

  Index dim() const { return lower.size(); }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
};

void validate(const PriorBox& prior);

/// D x count uniform draws.
Eigen::MatrixXd sample_prior(const PriorBox& prior, Index count, std::uint64_t seed);

/// (theta, seed) -> observation matrix.
using Simulator = std::function<Eigen::MatrixXd(const Eigen::VectorXd& theta, std::uint64_t seed)>;

/// Macro simulator; the observation is the T x 4n indicator matrix.
Simulator market_simulator(MarketSpec spec, SimulationConfig cfg);

/// Wraps a simulator and counts invocations; copies share the counter.
class CountingSimulator {
 public:
  explicit CountingSimulator(Simulator inner)
      : inner_(std::move(inner)), calls_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  Eigen::MatrixXd operator()(const Eigen::VectorXd& theta, std::uint64_t seed) const {
    calls_->fetch_add(1, std::memory_order_relaxed);
    return inner_(theta, seed);
  }
  std::uint64_t calls() const { return calls_->load(); }

 private:
  Simulator inner_;
  std::shared_ptr<std::atomic<std::uint64_t>> calls_;
};

struct SimulationBatch {
  Eigen::MatrixXd theta;  // D x N
  std::vector<Eigen::MatrixXd> observations;
  std::vector<double> seconds;
  std::vector<std::string> errors;  // empty on success

  Index size() const { return theta.cols(); }
  Index completed() const;
  SimulationBatch completed_only() const;
};

struct BatchOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::function<void(Index done, Index total)> progress;
};

/// Simulation i uses stream_seed(seed, i), so results do not depend on the
/// worker count or execution order. Failures are recorded per simulation.
SimulationBatch run_simulation_batch(const Simulator& sim, const Eigen::MatrixXd& thetas,
                                     const BatchOptions& opts = {});
SimulationBatch run_simulation_batch(const MarketSpec& spec, const SimulationConfig& cfg,
                                     const Eigen::MatrixXd& thetas, const BatchOptions& opts = {});

enum class SummaryMode { handcrafted, learned };

std::string to_string(SummaryMode mode);
SummaryMode parse_summary_mode(const std::string& name);

struct FitOptions {
  SummaryMode mode = SummaryMode::handcrafted;
  StatisticsMode statistics = StatisticsMode::per_series;
  Index embedding_hidden = 32;
  MafOptions flow;
  TrainConfig train;
};

/// Trained estimator plus the summary pipeline that produced its inputs.
struct PosteriorBuilder {
  ConditionalEstimator estimator;
  SummaryMode mode = SummaryMode::handcrafted;
  StatisticsMode statistics = StatisticsMode::per_series;
  PriorBox prior;
  TrainLog log;

  /// Estimator input for a raw observation.
  Eigen::MatrixXd prepare(const Eigen::MatrixXd& observation) const;
  Index context_dim() const { return estimator.flow.context_dim(); }
};

PosteriorBuilder fit_posterior(const SimulationBatch& batch, const PriorBox& prior, const FitOptions& opts);

struct PosteriorSamples {
  Eigen::MatrixXd samples;  // D x count, all inside the support
  Index proposals = 0;

  double leakage() const {
    return proposals == 0 ? 0.0 : 1.0 - static_cast<double>(samples.cols()) / static_cast<double>(proposals);
  }
};

/// Flow with a fixed context, restricted to the prior support by rejection.
class MafPosterior {
 public:
  static constexpr double kMaxLeakage = 0.99;
  static constexpr Index kLeakageDraws = 10000;

  MafPosterior(std::shared_ptr<const MafStackd> flow, Eigen::VectorXd context, PriorBox support);

  const MafStackd& flow() const { return *flow_; }
  const Eigen::VectorXd& context() const { return context_; }
  const PriorBox& support() const { return support_; }
  /// Fraction of flow mass outside the support, estimated once at construction.
  double leakage() const { return leakage_; }

  PosteriorSamples sample(Index count, std::uint64_t seed) const;
  double log_prob(const Eigen::VectorXd& theta) const;
  /// Per-column log-density; every column must lie in the support.
  Eigen::VectorXd log_prob_batch(const Eigen::MatrixXd& thetas) const;

 private:
  std::shared_ptr<const MafStackd> flow_;
  Eigen::VectorXd context_;
  PriorBox support_;
  double leakage_ = 0;
};

MafPosterior condition(const PosteriorBuilder& builder, const Eigen::MatrixXd& observation);
MafPosterior condition(const ConditionalEstimator& estimator, const Eigen::MatrixXd& input, const PriorBox& support);

PosteriorSamples posterior_sample(const MafPosterior& posterior, Index count, std::uint64_t seed);
double posterior_log_prob(const MafPosterior& posterior, const Eigen::VectorXd& theta);

/// CSV with one row per column of samples.
void write_samples_csv(std::ostream& out, const Eigen::MatrixXd& samples,
                       const std::vector<std::string>& names = {"delta_u", "delta_v", "r"});
Eigen::MatrixXd read_samples_csv(std::istream& in, std::vector<std::string>* names = nullptr);

}  // namespace lmsbi
