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

#include "lmsbi/errors.hpp"
#include "lmsbi/sbc.hpp"

#include "toy_problem.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>
#include <json.hpp>

#include <numeric>
#include <random>
#include <sstream>

namespace lmsbi {
namespace {

Index boost_quantile(Index n, double p, double q) {
  using namespace boost::math::policies;
  using Binomial = boost::math::binomial_distribution<double, policy<discrete_quantile<integer_round_up>>>;
  return static_cast<Index>(boost::math::quantile(Binomial(static_cast<double>(n), p), q));
}

const Simulator identity_sim = [](const Eigen::VectorXd& theta, std::uint64_t) { return Eigen::MatrixXd(theta); };

PriorSampler unit_box(Index dim) {
  return box_sampler(PriorBox{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)});
}

TEST(UniformityBand, MatchesBinomialQuantiles) {
  const auto band = uniformity_band(1000, 20, 0.99);
  ASSERT_EQ(band.size(), 20u);
  EXPECT_EQ(band[0].first, boost_quantile(1000, 0.05, 0.005));
  EXPECT_EQ(band[0].second, boost_quantile(1000, 0.05, 0.995));
  for (const auto& b : band) EXPECT_EQ(b, band[0]);
  for (Index n : {20, 100, 300, 5000})
    for (double q : {0.001, 0.005, 0.5, 0.995})
      EXPECT_EQ(binomial_quantile(n, 0.05, q), boost_quantile(n, 0.05, q)) << n << " " << q;
}

TEST(UniformityBand, EdgeCases) {
  const auto one_each = uniformity_band(20, 20, 0.99);
  EXPECT_LE(one_each[0].first, 1);
  EXPECT_GE(one_each[0].second, 1);
  const auto full = uniformity_band(300, 20, 1.0);
  EXPECT_EQ(full[0], (std::pair<Index, Index>{0, 300}));
  EXPECT_THROW(uniformity_band(100, 1), ValidationError);
}

TEST(ChiSquare, SurvivalMatchesReference) {
  for (double dof : {1.0, 19.0, 99.0})
    for (double x : {0.5, 10.0, 19.0, 40.0, 150.0})
      EXPECT_NEAR(chi_square_survival(x, dof),
                  boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x)), 1e-12);
  const auto [stat, p] = chi_square_uniform({10, 10, 10, 10});
  EXPECT_EQ(stat, 0.0);
  EXPECT_EQ(p, 1.0);
  const auto [stat2, p2] = chi_square_uniform({40, 0, 0, 0});
  EXPECT_DOUBLE_EQ(stat2, 120.0);
  EXPECT_LT(p2, 1e-20);
}

TEST(RunSbc, PriorAsPosteriorPassesAcrossSeeds) {
  SbcConfig cfg;
  cfg.trials = 200;
  cfg.draws = 50;
  const PriorSampler prior = unit_box(3);
  const PosteriorFactory factory = [&](const Eigen::MatrixXd&, Index draws, std::uint64_t seed) {
    return prior(draws, seed);
  };
  int passes = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    cfg.seed = seed;
    const SbcReport r = run_sbc(prior, identity_sim, factory, cfg);
    for (const auto& p : r.parameters) {
      passes += p.p_value > 0.01 ? 1 : 0;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(passes) / total, 0.95);
}

TEST(RunSbc, ExactConjugatePosteriorStaysInTheBand) {
  testutil::GaussianToy toy;
  const PosteriorFactory exact = [&](const Eigen::MatrixXd& y, Index draws, std::uint64_t seed) {
    const auto [m, s] = toy.posterior(y.mean());
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g(m, s);
    Eigen::MatrixXd out(1, draws);
    for (Index j = 0; j < draws; ++j) out(0, j) = g(rng);
    return out;
  };
  SbcConfig cfg;
  cfg.seed = 1;
  const SbcReport r = run_sbc(toy.prior(), toy.simulator(), exact, cfg, {"mu"});
  ASSERT_EQ(r.completed, 300);
  EXPECT_EQ(r.parameters[0].bins_outside_band, 0);
  EXPECT_GT(r.parameters[0].p_value, 0.01);
}

TEST(RunSbc, DegeneratePosteriorIsRejected) {
  const PosteriorFactory copy = [](const Eigen::MatrixXd& y, Index draws, std::uint64_t) {
    return Eigen::MatrixXd(y.replicate(1, draws));
  };
  SbcConfig cfg;
  cfg.trials = 100;
  const SbcReport r = run_sbc(unit_box(3), identity_sim, copy, cfg);
  for (const auto& p : r.parameters) {
    for (Index rank : p.ranks) EXPECT_TRUE(rank == 0 || rank == cfg.draws);
    EXPECT_LT(p.p_value, 1e-10);
    EXPECT_GT(p.bins_outside_band, 0);
  }
}

TEST(RunSbc, OverConcentrationIsFlagged) {
  testutil::GaussianToy toy;
  const PosteriorFactory narrow = [&](const Eigen::MatrixXd& y, Index draws, std::uint64_t seed) {
    const auto [m, s] = toy.posterior(y.mean());
    Rng rng = make_rng(seed);
    std::normal_distribution<double> g(m, 0.3 * s);
    Eigen::MatrixXd out(1, draws);
    for (Index j = 0; j < draws; ++j) out(0, j) = g(rng);
    return out;
  };
  SbcConfig cfg;
  const SbcReport r = run_sbc(toy.prior(), toy.simulator(), narrow, cfg, {"mu"});
  const auto& c = r.parameters[0].counts;
  EXPECT_GT(c.front() + c.back(), 4 * r.band[0].second);
  EXPECT_GT(r.parameters[0].bins_outside_band, 0);
}

TEST(RunSbc, FailuresAreSkippedAndCounted) {
  const PosteriorFactory flaky = [](const Eigen::MatrixXd& y, Index draws, std::uint64_t seed) {
    if (y(0) > 0.7) throw NumericError("leakage");
    return unit_box(1)(draws, seed);
  };
  SbcConfig cfg;
  cfg.trials = 150;
  cfg.draws = 20;
  const SbcReport r = run_sbc(unit_box(1), identity_sim, flaky, cfg, {"x"});
  EXPECT_EQ(r.completed + r.skipped, 150);
  EXPECT_GT(r.skipped, 20);
  EXPECT_EQ(static_cast<Index>(r.skip_reasons.size()), r.skipped);
  EXPECT_NE(r.skip_reasons[0].find("leakage"), std::string::npos);
  const auto& p = r.parameters[0];
  EXPECT_EQ(std::accumulate(p.counts.begin(), p.counts.end(), Index{0}), r.completed);
  EXPECT_EQ(static_cast<Index>(p.ranks.size()), r.completed);
  for (Index rank : p.ranks) {
    EXPECT_GE(rank, 0);
    EXPECT_LE(rank, cfg.draws);
  }
  EXPECT_EQ(r.band, uniformity_band(r.completed, cfg.bins, cfg.coverage));
}

TEST(RunSbc, DeterministicAcrossWorkers) {
  const PriorSampler prior = unit_box(2);
  const PosteriorFactory factory = [&](const Eigen::MatrixXd&, Index draws, std::uint64_t seed) {
    return prior(draws, seed);
  };
  SbcConfig a;
  a.trials = 120;
  a.draws = 30;
  a.seed = 4;
  SbcConfig b = a;
  b.workers = 4;
  const auto ra = run_sbc(prior, identity_sim, factory, a, {"a", "b"});
  const auto rb = run_sbc(prior, identity_sim, factory, b, {"a", "b"});
  EXPECT_EQ(ra.parameters[1].ranks, rb.parameters[1].ranks);
  EXPECT_EQ(ra.parameters[1].counts, rb.parameters[1].counts);
}

TEST(RunSbc, ReportsSerialize) {
  const PriorSampler prior = unit_box(1);
  const PosteriorFactory factory = [&](const Eigen::MatrixXd&, Index draws, std::uint64_t seed) {
    return prior(draws, seed);
  };
  SbcConfig cfg;
  cfg.trials = 40;
  cfg.draws = 20;
  cfg.bins = 4;
  const auto r = run_sbc(prior, identity_sim, factory, cfg, {"x"});
  std::stringstream js;
  write_json(js, r);
  const auto j = nlohmann::json::parse(js.str());
  EXPECT_EQ(j["completed"], 40);
  EXPECT_EQ(j["parameters"][0]["name"], "x");
  std::stringstream csv;
  write_histogram_csv(csv, r);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "parameter,rank_bin,count,band_low,band_high");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 4);
}

TEST(RunSbc, RejectsBadConfig) {
  SbcConfig cfg;
  cfg.bins = 1;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg = SbcConfig{};
  cfg.coverage = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
}

}  // namespace
}  // namespace lmsbi
