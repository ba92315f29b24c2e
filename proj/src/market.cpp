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

#include "lmsbi/market.hpp"

#include "lmsbi/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lmsbi {

using nlohmann::json;

namespace {

void fail(const std::string& what) { throw ValidationError("invalid market spec: " + what); }

}  // namespace

void validate(const MarketSpec& spec) {
  const Index n = spec.occupations();
  if (n < 1) fail("occupation count must be positive");
  if (spec.automation_prob.size() != n) fail("p has length " + std::to_string(spec.automation_prob.size()) +
                                             ", expected " + std::to_string(n));
  if (spec.transition.rows() != n || spec.transition.cols() != n) fail("P must be n x n");
  for (Index i = 0; i < n; ++i) {
    if (spec.workforce(i) < 1) fail("z[" + std::to_string(i) + "] must be >= 1");
    const double p = spec.automation_prob(i);
    if (!(p >= 0.0 && p <= 1.0)) fail("p[" + std::to_string(i) + "] must lie in [0, 1]");
  }
  if (!spec.transition.allFinite()) fail("P has non-finite entries");
  if ((spec.transition.array() < 0.0).any()) fail("P has negative entries");
  for (Index i = 0; i < n; ++i) {
    const double row = spec.transition.row(i).sum();
    if (std::abs(row - 1.0) > 1e-9) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i << " of P sums to " << row << ", expected 1";
      fail(os.str());
    }
  }
}

BehaviouralParams BehaviouralParams::from_vector(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (theta.size() != 3) throw ValidationError("parameter vector must have 3 entries");
  return {theta(0), theta(1), theta(2)};
}

void validate(const BehaviouralParams& params) {
  auto check = [](double x, double hi, const char* name) {
    if (!(x >= 0.0 && x <= hi))
      throw ValidationError(std::string("parameter ") + name + " outside [0, " + std::to_string(hi) + "]");
  };
  check(params.delta_u, 0.02, "delta_u");
  check(params.delta_v, 0.02, "delta_v");
  check(params.r, 1.0, "r");
}

void validate(const SimulationConfig& cfg) {
  if (cfg.steps < 1) throw ValidationError("simulation needs at least one step");
  if (cfg.shock_step && (*cfg.shock_step < 0 || *cfg.shock_step >= cfg.steps))
    throw ValidationError("shock step must lie in [0, steps)");
  if (!(cfg.gamma_u >= 0.0 && cfg.gamma_u <= 1.0) || !(cfg.gamma_v >= 0.0 && cfg.gamma_v <= 1.0))
    throw ValidationError("demand sensitivities gamma_u, gamma_v must lie in [0, 1]");
  if (cfg.shock_mode == ShockMode::sigmoid && !(cfg.sigmoid_half_width > 0.0))
    throw ValidationError("sigmoid half width must be positive");
  if (cfg.burn_in < 0) throw ValidationError("burn-in must be non-negative");
  if (cfg.vacancy_lifetime && *cfg.vacancy_lifetime < 1)
    throw ValidationError("vacancy lifetime must be at least one step");
}

std::string market_to_json(const MarketSpec& spec) {
  const Index n = spec.occupations();
  json j;
  j["n"] = n;
  j["z"] = std::vector<std::int64_t>(spec.workforce.data(), spec.workforce.data() + n);
  j["p"] = std::vector<double>(spec.automation_prob.data(), spec.automation_prob.data() + n);
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(n * n));
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k) rows.push_back(spec.transition(i, k));
  j["P"] = rows;
  return j.dump();
}

MarketSpec market_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("market spec is not valid JSON: ") + e.what());
  }
  MarketSpec spec;
  try {
    const auto n = j.at("n").get<Index>();
    if (n < 1) fail("n must be positive");
    const auto z = j.at("z").get<std::vector<std::int64_t>>();
    const auto p = j.at("p").get<std::vector<double>>();
    // P may be given flat (row-major) or as an array of rows.
    std::vector<double> flat;
    const auto& pj = j.at("P");
    if (!pj.empty() && pj.front().is_array()) {
      for (const auto& row : pj) {
        const auto r = row.get<std::vector<double>>();
        if (static_cast<Index>(r.size()) != n) fail("P row length differs from n");
        flat.insert(flat.end(), r.begin(), r.end());
      }
    } else {
      flat = pj.get<std::vector<double>>();
    }
    if (static_cast<Index>(z.size()) != n) fail("z length differs from n");
    if (static_cast<Index>(p.size()) != n) fail("p length differs from n");
    if (static_cast<Index>(flat.size()) != n * n) fail("P must have n*n entries");
    spec.workforce = Eigen::Map<const VectorXc>(z.data(), n);
    spec.automation_prob = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
    spec.transition = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), n, n);
  } catch (const json::exception& e) {
    fail(e.what());
  }
  validate(spec);
  return spec;
}

MarketSpec load_market_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open market spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return market_from_json(ss.str());
}

void save_market_json(const MarketSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << market_to_json(spec) << '\n';
}

}  // namespace lmsbi
