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

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lmsbi {

using Index = Eigen::Index;
using VectorXc = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using MatrixXc = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Labour-market network: workforce per occupation, automation probability
/// per occupation and the row-stochastic occupation transition matrix.
struct MarketSpec {
  VectorXc workforce;
  Eigen::VectorXd automation_prob;
  Eigen::MatrixXd transition;

  Index occupations() const { return workforce.size(); }
  std::int64_t total_workforce() const { return workforce.sum(); }
};

/// Throws ValidationError naming the first violated invariant.
void validate(const MarketSpec& spec);

MarketSpec load_market_json(const std::filesystem::path& path);
void save_market_json(const MarketSpec& spec, const std::filesystem::path& path);
std::string market_to_json(const MarketSpec& spec);
MarketSpec market_from_json(const std::string& text);

/// Behavioural parameters: separation rate, vacancy-opening rate and the
/// probability that an unemployed worker applies within their own occupation.
struct BehaviouralParams {
  double delta_u = 0.016;
  double delta_v = 0.012;
  double r = 0.55;

  static BehaviouralParams from_vector(const Eigen::Ref<const Eigen::VectorXd>& theta);
  Eigen::Vector3d to_vector() const { return {delta_u, delta_v, r}; }
};

/// Checks the prior support: delta_u, delta_v in [0, 0.02], r in [0, 1].
void validate(const BehaviouralParams& params);

struct MarketState {
  VectorXc employed;
  VectorXc unemployed;
  VectorXc vacancies;
  Eigen::VectorXd demand;
  // Per-occupation vacancy counts by opening step, oldest first. Only
  // populated when a vacancy lifetime cap is active.
  std::vector<std::deque<std::int64_t>> vacancy_cohorts;
};

enum class ShockMode { step, sigmoid };

/// Thirty years of 6.75-week steps.
inline constexpr int kDefaultShockStep = 231;

struct SimulationConfig {
  int steps = 600;
  std::optional<int> shock_step;
  ShockMode shock_mode = ShockMode::step;
  double sigmoid_half_width = 10.0;
  double gamma_u = 0.1;
  double gamma_v = 0.1;
  std::uint64_t seed = 0;
  int burn_in = 0;
  std::optional<int> vacancy_lifetime;
  std::uint64_t micro_budget_bytes = std::uint64_t{8} << 30;
};

void validate(const SimulationConfig& cfg);

/// T x 4n indicator matrix. Row t holds e_1..e_n, u_1..u_n, v_1..v_n, d_1..d_n
/// as recorded after step t.
struct MacroTrajectory {
  Eigen::MatrixXd data;

  Index steps() const { return data.rows(); }
  Index occupations() const { return data.cols() / 4; }
};

/// Per-step job-transition counts J_t[i][j] (moves out of the unemployment
/// pool of i into a job in j) alongside the macro indicators.
struct MicroTrajectory {
  std::vector<MatrixXc> transitions;
  MacroTrajectory indicators;
};

}  // namespace lmsbi
