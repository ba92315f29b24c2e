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

#include "lmsbi/sbc.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/rng.hpp"

#include <json.hpp>
#include <unsupported/Eigen/SpecialFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

namespace lmsbi {

void validate(const SbcConfig& cfg) {
  if (cfg.trials < 1) throw ValidationError("SBC needs at least one trial");
  if (cfg.draws < 1) throw ValidationError("SBC needs at least one posterior draw per trial");
  if (cfg.bins < 2) throw ValidationError("SBC needs at least two bins");
  if (!(cfg.coverage > 0.0 && cfg.coverage <= 1.0)) throw ValidationError("band coverage must lie in (0, 1]");
}

Index binomial_quantile(Index n, double p, double q) {
  if (q <= 0.0) return 0;
  if (q >= 1.0) return n;
  double cdf = 0;
  const double lp = std::log(p), lq = std::log1p(-p);
  for (Index k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k), nn = static_cast<double>(n);
    cdf += std::exp(std::lgamma(nn + 1) - std::lgamma(kk + 1) - std::lgamma(nn - kk + 1) + kk * lp + (nn - kk) * lq);
    if (cdf >= q * (1.0 - 1e-12)) return k;
  }
  return n;
}

std::vector<std::pair<Index, Index>> uniformity_band(Index n, Index bins, double coverage) {
  if (bins < 2) throw ValidationError("uniformity band needs at least two bins");
  if (n < 0) throw ValidationError("trial count must be non-negative");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ValidationError("band coverage must lie in (0, 1]");
  const double tail = 0.5 * (1.0 - coverage);
  const double p = 1.0 / static_cast<double>(bins);
  const std::pair<Index, Index> band =
      coverage >= 1.0 ? std::pair<Index, Index>{0, n}
                      : std::pair<Index, Index>{binomial_quantile(n, p, tail), binomial_quantile(n, p, 1.0 - tail)};
  return std::vector<std::pair<Index, Index>>(static_cast<std::size_t>(bins), band);
}

double chi_square_survival(double statistic, double dof) {
  if (!(dof > 0.0)) throw ValidationError("chi-square degrees of freedom must be positive");
  if (statistic <= 0.0) return 1.0;
  return Eigen::numext::igammac(0.5 * dof, 0.5 * statistic);
}

std::pair<double, double> chi_square_uniform(const std::vector<Index>& counts) {
  Index total = 0;
  for (Index c : counts) total += c;
  if (counts.size() < 2 || total == 0) return {0.0, 1.0};
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0;
  for (Index c : counts) stat += std::pow(static_cast<double>(c) - expected, 2) / expected;
  return {stat, chi_square_survival(stat, static_cast<double>(counts.size() - 1))};
}

SbcReport run_sbc(const PriorSampler& prior, const Simulator& simulator, const PosteriorFactory& posterior,
                  const SbcConfig& cfg, std::vector<std::string> names) {
  validate(cfg);
  const auto trials = static_cast<std::size_t>(cfg.trials);
  struct Trial {
    std::vector<Index> ranks;
    std::vector<Index> bin;
    std::string error;
  };
  std::vector<Trial> out(trials);

  auto run_trial = [&](std::size_t i) {
    Rng rng = make_rng(cfg.seed, i);
    Trial& t = out[i];
    try {
      const Eigen::VectorXd theta = prior(1, rng()).col(0);
      const Eigen::MatrixXd y = simulator(theta, rng());
      const Eigen::MatrixXd draws = posterior(y, cfg.draws, rng());
      if (draws.rows() != theta.size() || draws.cols() != cfg.draws)
        throw ValidationError("posterior returned " + std::to_string(draws.rows()) + "x" +
                              std::to_string(draws.cols()) + " draws");
      std::uniform_real_distribution<double> jitter(0.0, 1.0);
      for (Index k = 0; k < theta.size(); ++k) {
        const Index rank = (draws.row(k).array() < theta(k)).count();
        const double u = (static_cast<double>(rank) + jitter(rng)) / static_cast<double>(cfg.draws + 1);
        t.ranks.push_back(rank);
        t.bin.push_back(std::min(cfg.bins - 1, static_cast<Index>(u * static_cast<double>(cfg.bins))));
      }
    } catch (const std::exception& e) {
      t.ranks.clear();
      t.bin.clear();
      t.error = e.what();
      if (t.error.empty()) t.error = "posterior failure";
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(trials)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < trials;) run_trial(i);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  SbcReport report;
  report.trials = cfg.trials;
  report.draws = cfg.draws;
  report.bins = cfg.bins;
  report.coverage = cfg.coverage;
  std::optional<std::size_t> dim;
  for (std::size_t i = 0; i < trials; ++i) {
    if (out[i].error.empty() && !dim) dim = out[i].ranks.size();
  }
  const std::size_t d = dim.value_or(names.size());
  if (names.size() != d) {
    names.clear();
    for (std::size_t k = 0; k < d; ++k) names.push_back("theta_" + std::to_string(k));
  }
  report.parameters.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    report.parameters[k].name = names[k];
    report.parameters[k].counts.assign(static_cast<std::size_t>(cfg.bins), 0);
  }
  for (std::size_t i = 0; i < trials; ++i) {
    if (!out[i].error.empty()) {
      ++report.skipped;
      report.skip_reasons.push_back("trial " + std::to_string(i) + ": " + out[i].error);
      continue;
    }
    ++report.completed;
    for (std::size_t k = 0; k < d; ++k) {
      report.parameters[k].ranks.push_back(out[i].ranks[k]);
      ++report.parameters[k].counts[static_cast<std::size_t>(out[i].bin[k])];
    }
  }
  report.band = uniformity_band(report.completed, cfg.bins, cfg.coverage);
  for (auto& p : report.parameters) {
    std::tie(p.chi_square, p.p_value) = chi_square_uniform(p.counts);
    for (std::size_t b = 0; b < p.counts.size(); ++b)
      if (p.counts[b] < report.band[b].first || p.counts[b] > report.band[b].second) ++p.bins_outside_band;
  }
  return report;
}

void write_json(std::ostream& out, const SbcReport& report) {
  nlohmann::json j;
  j["trials"] = report.trials;
  j["completed"] = report.completed;
  j["skipped"] = report.skipped;
  j["skip_reasons"] = report.skip_reasons;
  j["draws"] = report.draws;
  j["bins"] = report.bins;
  j["coverage"] = report.coverage;
  nlohmann::json band = nlohmann::json::array();
  for (const auto& [lo, hi] : report.band) band.push_back({lo, hi});
  j["band"] = band;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : report.parameters) {
    params.push_back({{"name", p.name},
                      {"ranks", p.ranks},
                      {"counts", p.counts},
                      {"chi_square", p.chi_square},
                      {"p_value", p.p_value},
                      {"bins_outside_band", p.bins_outside_band},
                      {"fraction_within_band", p.fraction_within_band()}});
  }
  j["parameters"] = params;
  out << j.dump(2) << '\n';
}

void write_histogram_csv(std::ostream& out, const SbcReport& report) {
  out << "parameter,rank_bin,count,band_low,band_high\n";
  for (const auto& p : report.parameters)
    for (std::size_t b = 0; b < p.counts.size(); ++b)
      out << p.name << ',' << b << ',' << p.counts[b] << ',' << report.band[b].first << ','
          << report.band[b].second << '\n';
}

}  // namespace lmsbi
