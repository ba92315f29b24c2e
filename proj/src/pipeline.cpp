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

#include "lmsbi/pipeline.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/rng.hpp"
#include "lmsbi/simulator.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace lmsbi {

PriorBox PriorBox::defaults() {
  return {Eigen::Vector3d(0.0, 0.0, 0.0), Eigen::Vector3d(0.02, 0.02, 1.0)};
}

PriorBox PriorBox::unbounded(Index dim) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(dim, -inf), Eigen::VectorXd::Constant(dim, inf)};
}

bool PriorBox::contains(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != dim()) return false;
  return (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
}

void validate(const PriorBox& prior) {
  if (prior.lower.size() == 0 || prior.lower.size() != prior.upper.size())
    throw ValidationError("prior bounds must be nonempty and of equal length");
  for (Index k = 0; k < prior.dim(); ++k)
    if (!(prior.lower(k) < prior.upper(k)))
      throw ValidationError("prior lower bound must be below upper bound in dimension " + std::to_string(k));
}

Eigen::MatrixXd sample_prior(const PriorBox& prior, Index count, std::uint64_t seed) {
  validate(prior);
  if (count < 1) throw ValidationError("prior sample count must be positive");
  if (!prior.lower.allFinite() || !prior.upper.allFinite())
    throw ValidationError("cannot sample an unbounded prior box");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd out(prior.dim(), count);
  for (Index j = 0; j < count; ++j)
    for (Index k = 0; k < prior.dim(); ++k)
      out(k, j) = prior.lower(k) + (prior.upper(k) - prior.lower(k)) * u(rng);
  return out;
}

Simulator market_simulator(MarketSpec spec, SimulationConfig cfg) {
  validate(spec);
  validate(cfg);
  return [spec = std::move(spec), cfg](const Eigen::VectorXd& theta, std::uint64_t seed) {
    SimulationConfig run = cfg;
    run.seed = seed;
    return simulate(spec, BehaviouralParams::from_vector(theta), run).data;
  };
}

Index SimulationBatch::completed() const {
  Index n = 0;
  for (const auto& e : errors) n += e.empty() ? 1 : 0;
  return n;
}

SimulationBatch SimulationBatch::completed_only() const {
  SimulationBatch out;
  out.theta.resize(theta.rows(), completed());
  Index k = 0;
  for (Index i = 0; i < size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (!errors[s].empty()) continue;
    out.theta.col(k++) = theta.col(i);
    out.observations.push_back(observations[s]);
    out.seconds.push_back(seconds[s]);
    out.errors.emplace_back();
  }
  return out;
}

SimulationBatch run_simulation_batch(const Simulator& sim, const Eigen::MatrixXd& thetas, const BatchOptions& opts) {
  const Index n = thetas.cols();
  const auto count = static_cast<std::size_t>(n);
  SimulationBatch batch{thetas, std::vector<Eigen::MatrixXd>(count), std::vector<double>(count, 0.0),
                        std::vector<std::string>(count)};
  std::atomic<Index> next{0};
  std::atomic<Index> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (Index i; (i = next.fetch_add(1)) < n;) {
      const auto s = static_cast<std::size_t>(i);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        batch.observations[s] = sim(thetas.col(i), stream_seed(opts.seed, static_cast<std::uint64_t>(i)));
      } catch (const std::exception& e) {
        batch.errors[s] = e.what();
        if (batch.errors[s].empty()) batch.errors[s] = "simulation failed";
      }
      batch.seconds[s] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const Index finished = done.fetch_add(1) + 1;
      if (opts.progress) {
        std::lock_guard lock(progress_mutex);
        opts.progress(finished, n);
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(std::max<Index>(n, 1))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return batch;
}

SimulationBatch run_simulation_batch(const MarketSpec& spec, const SimulationConfig& cfg,
                                     const Eigen::MatrixXd& thetas, const BatchOptions& opts) {
  return run_simulation_batch(market_simulator(spec, cfg), thetas, opts);
}

std::string to_string(SummaryMode mode) {
  return mode == SummaryMode::learned ? "learned" : "handcrafted";
}

SummaryMode parse_summary_mode(const std::string& name) {
  if (name == "handcrafted") return SummaryMode::handcrafted;
  if (name == "learned") return SummaryMode::learned;
  throw ValidationError("unknown summary mode '" + name + "' (expected handcrafted or learned)");
}

Eigen::MatrixXd PosteriorBuilder::prepare(const Eigen::MatrixXd& observation) const {
  if (mode == SummaryMode::learned) return observation;
  return handcrafted(observation, statistics).values;
}

PosteriorBuilder fit_posterior(const SimulationBatch& batch, const PriorBox& prior, const FitOptions& opts) {
  validate(prior);
  const SimulationBatch ok = batch.completed_only();
  if (ok.size() == 0) throw ValidationError("no completed simulations to fit");
  if (ok.theta.rows() != prior.dim()) throw ValidationError("parameter dimension differs from prior");

  PosteriorBuilder builder;
  builder.mode = opts.mode;
  builder.statistics = opts.statistics;
  builder.prior = prior;

  TrainingSet data{ok.theta, {}};
  data.inputs.reserve(ok.observations.size());
  for (const auto& obs : ok.observations) data.inputs.push_back(builder.prepare(obs));

  EstimatorOptions arch{opts.flow, opts.mode == SummaryMode::learned ? opts.embedding_hidden : 0};
  if (opts.mode == SummaryMode::learned && opts.embedding_hidden < 1)
    throw ValidationError("learned summaries need a positive embedding size");
  auto fit = train(data, arch, opts.train);
  builder.estimator = std::move(fit.estimator);
  builder.log = std::move(fit.log);
  return builder;
}

MafPosterior::MafPosterior(std::shared_ptr<const MafStackd> flow, Eigen::VectorXd context, PriorBox support)
    : flow_(std::move(flow)), context_(std::move(context)), support_(std::move(support)) {
  validate(support_);
  if (support_.dim() != flow_->dim()) throw ValidationError("support dimension differs from flow dimension");
  if (context_.size() != flow_->context_dim()) throw ValidationError("context dimension differs from flow");
  Rng rng = make_rng(0x6c65616b616765ULL);
  const Eigen::MatrixXd draws = flow_->sample(context_, rng, kLeakageDraws);
  Index outside = 0;
  for (Index j = 0; j < draws.cols(); ++j) outside += support_.contains(draws.col(j)) ? 0 : 1;
  leakage_ = static_cast<double>(outside) / static_cast<double>(kLeakageDraws);
}

PosteriorSamples MafPosterior::sample(Index count, std::uint64_t seed) const {
  if (count < 1) throw ValidationError("sample count must be positive");
  if (leakage_ > kMaxLeakage) {
    std::ostringstream os;
    os << "posterior leakage " << leakage_ << " exceeds " << kMaxLeakage
       << "; the flow places almost no mass inside the prior support";
    throw NumericError(os.str());
  }
  Rng rng = make_rng(seed);
  PosteriorSamples out{Eigen::MatrixXd(flow_->dim(), count), 0};
  Index accepted = 0;
  const Index limit = 1000 * count + kLeakageDraws;
  const double expected = 1.0 / std::max(1.0 - leakage_, 1e-2);
  while (accepted < count) {
    const auto chunk = static_cast<Index>(std::ceil(static_cast<double>(count - accepted) * expected * 1.1)) + 16;
    const Eigen::MatrixXd draws = flow_->sample(context_, rng, chunk);
    for (Index j = 0; j < chunk && accepted < count; ++j) {
      ++out.proposals;
      if (support_.contains(draws.col(j))) out.samples.col(accepted++) = draws.col(j);
    }
    if (accepted < count && out.proposals > limit) {
      std::ostringstream os;
      os << "rejection sampling accepted " << accepted << " of " << out.proposals
         << " proposals; posterior leakage is pathological";
      throw NumericError(os.str());
    }
  }
  return out;
}

Eigen::VectorXd MafPosterior::log_prob_batch(const Eigen::MatrixXd& thetas) const {
  for (Index j = 0; j < thetas.cols(); ++j)
    if (!support_.contains(thetas.col(j))) throw ValidationError("theta lies outside the prior support");
  if (leakage_ >= 1.0) throw NumericError("posterior has no mass inside the prior support");
  return flow_->log_prob(thetas, context_).array() - std::log1p(-leakage_);
}

double MafPosterior::log_prob(const Eigen::VectorXd& theta) const { return log_prob_batch(theta)(0); }

MafPosterior condition(const ConditionalEstimator& estimator, const Eigen::MatrixXd& input, const PriorBox& support) {
  const Eigen::MatrixXd ctx = estimator.context({&input});
  return MafPosterior(std::make_shared<const MafStackd>(estimator.flow), ctx.col(0), support);
}

MafPosterior condition(const PosteriorBuilder& builder, const Eigen::MatrixXd& observation) {
  return condition(builder.estimator, builder.prepare(observation), builder.prior);
}

PosteriorSamples posterior_sample(const MafPosterior& posterior, Index count, std::uint64_t seed) {
  return posterior.sample(count, seed);
}

double posterior_log_prob(const MafPosterior& posterior, const Eigen::VectorXd& theta) {
  return posterior.log_prob(theta);
}

void write_samples_csv(std::ostream& out, const Eigen::MatrixXd& samples, const std::vector<std::string>& names) {
  if (static_cast<Index>(names.size()) != samples.rows()) throw ValidationError("column name count mismatch");
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
  for (Index j = 0; j < samples.cols(); ++j) {
    for (Index k = 0; k < samples.rows(); ++k) out << (k ? "," : "") << samples(k, j);
    out << '\n';
  }
  out.precision(old);
}

Eigen::MatrixXd read_samples_csv(std::istream& in, std::vector<std::string>* names) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty samples CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::size_t cols = 0;
    for (std::string cell; std::getline(ss, cell, ',');) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("non-numeric cell '" + cell + "' in samples CSV row " + std::to_string(rows + 1));
      }
      ++cols;
    }
    if (cols != header.size()) throw ValidationError("samples CSV row " + std::to_string(rows + 1) + " has wrong width");
    ++rows;
  }
  if (names) *names = header;
  return Eigen::Map<Eigen::MatrixXd>(values.data(), static_cast<Index>(header.size()), rows);
}

}  // namespace lmsbi
