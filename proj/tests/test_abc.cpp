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

#include "toy_problem.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmsbi {
namespace {

using testutil::GaussianToy;

AbcConfig config(Index draws, std::uint64_t seed) {
  AbcConfig cfg;
  cfg.draws = draws;
  cfg.seed = seed;
  return cfg;
}

Eigen::MatrixXd toy_observation(const GaussianToy& toy, double mu) {
  return toy.simulator()(Eigen::VectorXd::Constant(1, mu), 99);
}

TEST(RejectionAbc, InfiniteEpsilonAcceptsEveryDraw) {
  GaussianToy toy;
  AbcConfig cfg = config(500, 1);
  cfg.epsilon = std::numeric_limits<double>::infinity();
  const auto r = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, toy_observation(toy, 0.3), cfg);
  EXPECT_EQ(r.accepted.cols(), 500);
  EXPECT_EQ(r.accepted, r.theta);
  EXPECT_EQ(r.accepted, toy.prior()(500, stream_seed(1, 0)));
}

TEST(RejectionAbc, FullQuantileMatchesInfiniteEpsilon) {
  GaussianToy toy;
  const auto y = toy_observation(toy, 0.3);
  AbcConfig all = config(300, 2);
  all.quantile = 1.0;
  AbcConfig inf = config(300, 2);
  inf.epsilon = std::numeric_limits<double>::infinity();
  const auto a = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, all);
  const auto b = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, inf);
  EXPECT_EQ(a.accepted, b.accepted);
  EXPECT_EQ(a.distances, b.distances);
}

TEST(RejectionAbc, AcceptedDistancesRespectTheThreshold) {
  GaussianToy toy;
  const auto y = toy_observation(toy, -0.4);
  for (double q : {0.01, 0.1, 0.5}) {
    AbcConfig cfg = config(2000, 3);
    cfg.quantile = q;
    const auto r = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, cfg);
    EXPECT_EQ(r.accepted.cols(), static_cast<Index>(std::ceil(q * 2000)));
    EXPECT_LE(r.distances.maxCoeff(), r.threshold);
    // Nothing rejected is closer than the threshold.
    Index closer = 0;
    for (Index i = 0; i < r.all_distances.size(); ++i) closer += r.all_distances(i) < r.threshold ? 1 : 0;
    EXPECT_LE(closer, r.accepted.cols());
  }
  AbcConfig eps = config(2000, 3);
  eps.epsilon = 0.05;
  const auto r = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, eps);
  EXPECT_LE(r.distances.maxCoeff(), 0.05);
}

TEST(RejectionAbc, SmallerQuantileGivesASubset) {
  GaussianToy toy;
  const auto y = toy_observation(toy, 0.8);
  std::vector<Index> previous;
  for (double q : {0.5, 0.2, 0.05, 0.01}) {
    AbcConfig cfg = config(3000, 4);
    cfg.quantile = q;
    const auto r = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, cfg);
    if (!previous.empty())
      EXPECT_TRUE(std::includes(previous.begin(), previous.end(), r.accepted_index.begin(), r.accepted_index.end()));
    previous = r.accepted_index;
  }
}

TEST(RejectionAbc, ZeroAcceptancesSuggestQuantileMode) {
  GaussianToy toy;
  AbcConfig cfg = config(100, 5);
  cfg.epsilon = 0.0;
  try {
    rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, toy_observation(toy, 0), cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("quantile"), std::string::npos);
  }
}

TEST(RejectionAbc, MatchesTheConjugatePosteriorMean) {
  GaussianToy toy;
  const auto y = toy_observation(toy, 0.7);
  const auto [mean, sd] = toy.posterior(y.mean());
  AbcConfig cfg = config(100000, 6);
  cfg.quantile = 0.01;
  const auto r = rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, cfg);
  const double se = sd / std::sqrt(static_cast<double>(r.accepted.cols()));
  EXPECT_NEAR(r.accepted.row(0).mean(), mean, 3 * se);
  EXPECT_LT(testutil::wasserstein_to_normal(r.accepted.row(0).transpose(), mean, sd), 0.05);
}

TEST(RejectionAbc, FailedSimulationsAreCountedAndExcluded) {
  const PriorSampler prior = [](Index n, std::uint64_t) {
    return Eigen::RowVectorXd::LinSpaced(n, 0, 1).eval();
  };
  const Simulator sim = [](const Eigen::VectorXd& t, std::uint64_t) -> Eigen::MatrixXd {
    if (t(0) > 0.5) throw NumericError("boom");
    return Eigen::MatrixXd(t);
  };
  AbcConfig cfg = config(11, 7);
  cfg.quantile = 1.0;
  const SummaryFn id = [](const Eigen::MatrixXd& x) { return Eigen::VectorXd(x.reshaped()); };
  const auto r = rejection_abc(prior, sim, id, Eigen::MatrixXd::Zero(1, 1), cfg);
  EXPECT_EQ(r.failed, 5);
  EXPECT_EQ(r.accepted.cols(), 6);
  EXPECT_TRUE(std::isnan(r.all_distances(10)));
}

TEST(RejectionAbc, WorkerCountDoesNotChangeTheResult) {
  GaussianToy toy;
  const auto y = toy_observation(toy, 0.1);
  AbcConfig a = config(400, 8), b = config(400, 8);
  b.workers = 3;
  a.quantile = b.quantile = 0.1;
  EXPECT_EQ(rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, a).accepted,
            rejection_abc(toy.prior(), toy.simulator(), GaussianToy::summary, y, b).accepted);
}

TEST(RejectionAbc, RejectsInvalidConfig) {
  AbcConfig cfg;
  cfg.draws = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg = AbcConfig{};
  cfg.quantile = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg.quantile = 1.5;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg = AbcConfig{};
  cfg.epsilon = -1;
  EXPECT_THROW(validate(cfg), ValidationError);
}

TEST(MedianAbsoluteDeviation, KnownValues) {
  Eigen::MatrixXd x(2, 5);
  x << 1, 2, 3, 4, 100, 5, 5, 5, 5, 5;
  const Eigen::VectorXd mad = median_absolute_deviation(x);
  EXPECT_DOUBLE_EQ(mad(0), 1.0);
  EXPECT_DOUBLE_EQ(mad(1), 0.0);
  Eigen::MatrixXd even(1, 4);
  even << 1, 2, 4, 8;  // median 3, deviations 2 1 1 5
  EXPECT_DOUBLE_EQ(median_absolute_deviation(even)(0), 1.5);
}

TEST(RejectionAbc, CsvHasDistanceColumn) {
  AbcResult r;
  r.accepted = Eigen::MatrixXd::Ones(3, 1);
  r.distances = Eigen::VectorXd::Constant(1, 0.25);
  std::stringstream s;
  write_csv(s, r);
  EXPECT_EQ(s.str(), "delta_u,delta_v,r,distance\n1,1,1,0.25\n");
}

}  // namespace
}  // namespace lmsbi
