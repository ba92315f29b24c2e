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

#include "lmsbi/simulator.hpp"

#include "lmsbi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace lmsbi {

namespace {

std::int64_t draw_binomial(Rng& rng, std::int64_t trials, double prob) {
  if (trials <= 0 || prob <= 0.0) return 0;
  if (prob >= 1.0) return trials;
  return std::binomial_distribution<std::int64_t>(trials, prob)(rng);
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

namespace detail {

std::int64_t sample_hypergeometric(Rng& rng, std::int64_t successes, std::int64_t failures, std::int64_t draws) {
  std::int64_t total = successes + failures;
  if (draws <= 0 || successes <= 0) return 0;
  if (draws >= total) return successes;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::int64_t hits = 0;
  for (std::int64_t d = 0; d < draws && successes > 0; ++d) {
    if (unit(rng) * static_cast<double>(total) < static_cast<double>(successes)) {
      --successes;
      ++hits;
    }
    --total;
  }
  return hits;
}

}  // namespace detail

MarketState init_state(const MarketSpec& spec) {
  validate(spec);
  const Index n = spec.occupations();
  MarketState s;
  s.employed = spec.workforce;
  s.unemployed = VectorXc::Zero(n);
  s.vacancies = VectorXc::Zero(n);
  s.demand = spec.workforce.cast<double>();
  return s;
}

Eigen::VectorXd target_demand(const MarketSpec& spec, int t, const SimulationConfig& cfg) {
  if (t < 0 || t >= cfg.steps) throw ValidationError("step index " + std::to_string(t) + " outside [0, T)");
  const Eigen::VectorXd base = spec.workforce.cast<double>();
  if (!cfg.shock_step) return base;

  const double shock_at = *cfg.shock_step;
  double weight;
  if (cfg.shock_mode == ShockMode::step) {
    if (t < shock_at) return base;
    weight = 1.0;
  } else {
    weight = 1.0 / (1.0 + std::exp(-(t - shock_at) / cfg.sigmoid_half_width));
  }

  const Eigen::VectorXd kept = (1.0 - spec.automation_prob.array()).matrix().cwiseProduct(base);
  const double kept_total = kept.sum();
  if (!(kept_total > 0.0)) throw ValidationError("automation shock removes all labour demand");
  const Eigen::VectorXd shocked = kept * (base.sum() / kept_total);
  return base + weight * (shocked - base);
}

namespace {

// Step kernel with buffers reused across steps. Applications are kept as a
// sparse (pool, job, count) list so a step costs O(n * pools) rather than
// touching dense n x n count matrices.
class Stepper {
 public:
  Stepper(const MarketSpec& spec, const BehaviouralParams& params, const SimulationConfig& cfg)
      : params_(params), cfg_(cfg), n_(spec.occupations()), transition_t_(spec.transition.transpose()) {}

  // Advances `state` in place. `transitions`, when given, must be n x n and
  // zero on entry.
  void advance(MarketState& state, const Eigen::Ref<const Eigen::VectorXd>& demand, Rng& rng,
               MatrixXc* transitions = nullptr, VectorXc* separations = nullptr, VectorXc* openings = nullptr) {
    const Index n = n_;
    if (demand.size() != n) throw ValidationError("demand vector length differs from occupation count");
    if (state.employed.size() != n || state.unemployed.size() != n || state.vacancies.size() != n)
      throw ValidationError("state dimensions differ from occupation count");
    const bool track_cohorts = cfg_.vacancy_lifetime.has_value();
    if (track_cohorts && state.vacancy_cohorts.size() != static_cast<std::size_t>(n)) {
      state.vacancy_cohorts.assign(static_cast<std::size_t>(n), {});
      for (Index i = 0; i < n; ++i)
        if (state.vacancies(i) > 0) state.vacancy_cohorts[i].push_back(state.vacancies(i));
    }

    // Separations and vacancy openings both read the start-of-step state.
    for (Index i = 0; i < n; ++i) {
      const std::int64_t e = state.employed(i);
      const double e_scale = static_cast<double>(std::max<std::int64_t>(e, 1));
      const double surplus = std::max(0.0, static_cast<double>(e) - demand(i));
      const double shortfall =
          std::max(0.0, demand(i) - static_cast<double>(e) - static_cast<double>(state.vacancies(i)));
      const double p_sep = clamp01(params_.delta_u + (1.0 - params_.delta_u) * cfg_.gamma_u * surplus / e_scale);
      const double p_vac = clamp01(params_.delta_v + (1.0 - params_.delta_v) * cfg_.gamma_v * shortfall / e_scale);
      const std::int64_t separated = draw_binomial(rng, e, p_sep);
      const std::int64_t opened = draw_binomial(rng, e, p_vac);
      state.employed(i) -= separated;
      state.unemployed(i) += separated;
      if (separations) (*separations)(i) = separated;
      if (openings) (*openings)(i) = opened;
      if (track_cohorts) state.vacancy_cohorts[i].push_back(opened);
      opened_(i) = opened;
    }
    state.vacancies += opened_.head(n);
    state.demand = demand;

    // Applications: every unemployed worker of pool i applies once, to j with
    // probability proportional to w_ij * v_j, w_ij = r [i == j] + (1 - r) P_ij.
    // Each worker is placed by a sorted uniform against the cumulative weights.
    entries_.clear();
    applicants_.setZero();
    const Eigen::VectorXd vac = state.vacancies.cast<double>();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (vac.any()) {
      for (Index i = 0; i < n; ++i) {
        const std::int64_t pool = state.unemployed(i);
        if (pool == 0) continue;
        weights_ = (1.0 - params_.r) * transition_t_.col(i).cwiseProduct(vac);
        weights_(i) += params_.r * vac(i);
        const double total = weights_.sum();
        if (!(total > 0.0)) continue;
        marks_.resize(static_cast<std::size_t>(pool));
        for (double& m : marks_) m = unit(rng) * total;
        std::sort(marks_.begin(), marks_.end());
        double cum = 0;
        Index last = -1;
        std::size_t k = 0;
        for (Index j = 0; j < n && k < marks_.size(); ++j) {
          if (weights_(j) <= 0.0) continue;
          cum += weights_(j);
          last = j;
          const std::size_t start = k;
          while (k < marks_.size() && marks_[k] < cum) ++k;
          if (k > start) add_application(i, j, static_cast<std::int64_t>(k - start));
        }
        // Rounding can leave the top marks past the final cumulative sum.
        if (k < marks_.size()) add_application(i, last, static_cast<std::int64_t>(marks_.size() - k));
      }
    }

    // Hiring: occupation j fills min(v_j, applicants) vacancies with applicants
    // chosen uniformly at random. Entries are visited by job, then by pool.
    bucket_start_.setZero();
    for (const auto& a : entries_) ++bucket_start_(a.job + 1);
    for (Index j = 0; j < n; ++j) bucket_start_(j + 1) += bucket_start_(j);
    by_job_.resize(entries_.size());
    {
      Eigen::Matrix<Index, Eigen::Dynamic, 1> fill = bucket_start_.head(n);
      for (std::size_t e = 0; e < entries_.size(); ++e) by_job_[static_cast<std::size_t>(fill(entries_[e].job)++)] = e;
    }
    hired_into_.setZero();
    for (Index j = 0; j < n; ++j) {
      std::int64_t applicants = applicants_(j);
      if (applicants == 0) continue;
      std::int64_t hires = std::min(state.vacancies(j), applicants);
      const bool all = hires == applicants;
      for (Index b = bucket_start_(j); b < bucket_start_(j + 1) && hires > 0; ++b) {
        const Application& a = entries_[by_job_[static_cast<std::size_t>(b)]];
        std::int64_t x = a.count;
        if (!all) {
          applicants -= a.count;
          x = detail::sample_hypergeometric(rng, a.count, applicants, hires);
          hires -= x;
        }
        if (x == 0) continue;
        if (transitions) (*transitions)(a.pool, j) = x;
        state.unemployed(a.pool) -= x;
        hired_into_(j) += x;
      }
    }
    state.employed += hired_into_;
    state.vacancies -= hired_into_;

    if (track_cohorts) {
      const auto lifetime = static_cast<std::size_t>(*cfg_.vacancy_lifetime);
      for (Index j = 0; j < n; ++j) {
        auto& cohorts = state.vacancy_cohorts[static_cast<std::size_t>(j)];
        std::int64_t filled = hired_into_(j);
        while (filled > 0 && !cohorts.empty()) {
          const std::int64_t take = std::min(filled, cohorts.front());
          cohorts.front() -= take;
          filled -= take;
          if (cohorts.front() == 0) cohorts.pop_front();
        }
        while (cohorts.size() > lifetime) {
          state.vacancies(j) -= cohorts.front();
          cohorts.pop_front();
        }
      }
    }
  }

 private:
  struct Application {
    Index pool, job;
    std::int64_t count;
  };

  void add_application(Index i, Index j, std::int64_t count) {
    entries_.push_back({i, j, count});
    applicants_(j) += count;
  }

  const BehaviouralParams& params_;
  const SimulationConfig& cfg_;
  Index n_;
  Eigen::MatrixXd transition_t_;  // column i is row i of P
  Eigen::VectorXd weights_{n_};
  std::vector<double> marks_;
  std::vector<Application> entries_;
  std::vector<std::size_t> by_job_;
  VectorXc applicants_ = VectorXc::Zero(n_);
  VectorXc opened_ = VectorXc::Zero(n_);
  VectorXc hired_into_ = VectorXc::Zero(n_);
  Eigen::Matrix<Index, Eigen::Dynamic, 1> bucket_start_ = Eigen::Matrix<Index, Eigen::Dynamic, 1>::Zero(n_ + 1);
};

}  // namespace

StepResult step(const MarketState& state, const MarketSpec& spec, const BehaviouralParams& params,
                const Eigen::Ref<const Eigen::VectorXd>& demand, const SimulationConfig& cfg, Rng& rng) {
  const Index n = spec.occupations();
  StepResult out{state, MatrixXc::Zero(n, n), VectorXc::Zero(n), VectorXc::Zero(n)};
  Stepper(spec, params, cfg).advance(out.state, demand, rng, &out.transitions, &out.separations, &out.openings);
  return out;
}

namespace {

void record(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, const MarketState& s) {
  const Index n = s.employed.size();
  row.segment(0, n) = s.employed.cast<double>().transpose();
  row.segment(n, n) = s.unemployed.cast<double>().transpose();
  row.segment(2 * n, n) = s.vacancies.cast<double>().transpose();
  row.segment(3 * n, n) = s.demand.transpose();
}

template <bool Micro, typename OnStep>
MacroTrajectory run(const MarketSpec& spec, const BehaviouralParams& params, const SimulationConfig& cfg,
                    OnStep&& on_step) {
  validate(spec);
  validate(params);
  validate(cfg);
  const Index n = spec.occupations();
  Rng rng(cfg.seed);
  MarketState state = init_state(spec);
  Stepper stepper(spec, params, cfg);
  const Eigen::VectorXd baseline = spec.workforce.cast<double>();
  for (int b = 0; b < cfg.burn_in; ++b) stepper.advance(state, baseline, rng);

  MacroTrajectory traj{Eigen::MatrixXd(cfg.steps, 4 * n)};
  for (int t = 0; t < cfg.steps; ++t) {
    if constexpr (Micro) {
      MatrixXc j = MatrixXc::Zero(n, n);
      stepper.advance(state, target_demand(spec, t, cfg), rng, &j);
      on_step(std::move(j));
    } else {
      stepper.advance(state, target_demand(spec, t, cfg), rng);
    }
    record(traj.data.row(t), state);
  }
  return traj;
}

}  // namespace

MacroTrajectory simulate(const MarketSpec& spec, const BehaviouralParams& params, const SimulationConfig& cfg) {
  return run<false>(spec, params, cfg, [](MatrixXc&&) {});
}

MicroTrajectory simulate_micro(const MarketSpec& spec, const BehaviouralParams& params,
                               const SimulationConfig& cfg) {
  validate(cfg);
  const std::uint64_t estimate =
      micro_memory_estimate(1, static_cast<std::uint64_t>(cfg.steps),
                            static_cast<std::uint64_t>(spec.occupations()), sizeof(double));
  if (estimate > cfg.micro_budget_bytes)
    throw ResourceError("micro trajectory needs " + std::to_string(estimate) + " bytes, budget is " +
                            std::to_string(cfg.micro_budget_bytes),
                        estimate);
  MicroTrajectory out;
  out.transitions.reserve(static_cast<std::size_t>(cfg.steps));
  out.indicators = run<true>(spec, params, cfg, [&](MatrixXc&& j) { out.transitions.push_back(std::move(j)); });
  return out;
}

std::uint64_t micro_memory_estimate(std::uint64_t sims, std::uint64_t steps, std::uint64_t occupations,
                                    std::uint64_t bytes_per_element) {
  if (sims == 0 || steps == 0 || occupations == 0 || bytes_per_element == 0)
    throw ValidationError("memory estimate inputs must be positive");
  std::uint64_t width = 0;
  if (__builtin_add_overflow(occupations, std::uint64_t{4}, &width))
    throw NumericError("memory estimate overflows 64 bits");
  std::uint64_t total = sims;
  for (const std::uint64_t f : {steps, occupations, width, bytes_per_element}) {
    if (__builtin_mul_overflow(total, f, &total)) throw NumericError("memory estimate overflows 64 bits");
  }
  return total;
}

}  // namespace lmsbi
