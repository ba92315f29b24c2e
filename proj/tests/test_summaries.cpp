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
#include "lmsbi/simulator.hpp"
#include "lmsbi/summaries.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace lmsbi;

TEST(Reshape, ShapesAndInverse) {
  Eigen::MatrixXd blocks(1, 8);
  blocks << 1, 2, 3, 4, 5, 6, 7, 8;
  const Eigen::MatrixXd r = reshape_macro(blocks);
  EXPECT_EQ(r.rows(), 2);
  EXPECT_EQ(r.cols(), 4);
  EXPECT_EQ(indicator_blocks(r), blocks);

  const Eigen::MatrixXd big = Eigen::MatrixXd::Random(10, 4 * 600);
  const Eigen::MatrixXd rb = reshape_macro(big);
  EXPECT_EQ(rb.rows(), 600);
  EXPECT_EQ(rb.cols(), 40);
  EXPECT_EQ(indicator_blocks(rb), big);
  EXPECT_EQ(reshape_macro(indicator_blocks(rb)), rb);
  EXPECT_THROW(reshape_macro(Eigen::MatrixXd(2, 3)), ValidationError);
}

TEST(Reshape, MatchesSimulatorRowLayout) {
  const MarketSpec spec = lmsbi::testutil::uniform_market({10, 20, 30}, {0.1, 0.2, 0.3});
  SimulationConfig cfg;
  cfg.steps = 12;
  const MacroTrajectory traj = simulate(spec, {}, cfg);
  const Eigen::MatrixXd blocks = indicator_blocks(traj.data);
  // S_t column 0 holds e for every occupation at step t.
  for (Index t = 0; t < 12; ++t) EXPECT_EQ(blocks.col(4 * t).transpose(), traj.data.row(t).head(3));
  EXPECT_EQ(&reshape_macro(traj), &traj.data);
}

TEST(TenStatistics, ConstantSeries) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(9, 3.5);
  const auto s = ten_statistics(x);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(s(k), 3.5);
  EXPECT_EQ(s(3), 0.0);
  for (int k = 4; k < 7; ++k) EXPECT_EQ(s(k), 3.5);
  for (int k = 7; k < 10; ++k) EXPECT_EQ(s(k), 0.0);
}

TEST(TenStatistics, HandEvaluated) {
  const Eigen::Vector4d x(1, 2, 3, 4);
  const auto s = ten_statistics(x);
  EXPECT_DOUBLE_EQ(s(0), 1.0);
  EXPECT_DOUBLE_EQ(s(1), 4.0);
  EXPECT_DOUBLE_EQ(s(2), 2.5);
  EXPECT_DOUBLE_EQ(s(3), 1.25);
  EXPECT_DOUBLE_EQ(s(4), 1.75);
  EXPECT_DOUBLE_EQ(s(5), 2.5);
  EXPECT_DOUBLE_EQ(s(6), 3.25);
  // (−1.5·−.5 + −.5·.5 + .5·1.5) / 5, then (−1.5·.5 + −.5·1.5) / 5, then −1.5·1.5 / 5
  EXPECT_DOUBLE_EQ(s(7), 0.25);
  EXPECT_DOUBLE_EQ(s(8), -0.3);
  EXPECT_DOUBLE_EQ(s(9), -0.45);
}

TEST(TenStatistics, OrderingProperty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 4.0);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd x(4 + rep % 30);
    for (Index i = 0; i < x.size(); ++i) x(i) = rep % 3 == 0 ? std::round(normal(rng)) : normal(rng);
    const auto s = ten_statistics(x);
    EXPECT_LE(s(0), s(4));
    EXPECT_LE(s(4), s(5));
    EXPECT_LE(s(5), s(6));
    EXPECT_LE(s(6), s(1));
    EXPECT_GE(s(3), 0.0);
    EXPECT_TRUE(s.allFinite());
    for (int k = 7; k < 10; ++k) EXPECT_LE(std::abs(s(k)), 1.0 + 1e-12);
  }
}

TEST(Handcrafted, Lengths) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(600, 40);
  const SummaryVector a = handcrafted(x);
  EXPECT_EQ(a.dim(), 400);
  EXPECT_EQ(a.kind, SummaryKind::handcrafted_per_series);
  const SummaryVector b = handcrafted(x, StatisticsMode::per_step);
  EXPECT_EQ(b.dim(), 6000);
  EXPECT_EQ(b.kind, SummaryKind::handcrafted_per_step);
  EXPECT_EQ(a.values.segment<10>(30), ten_statistics(x.col(3)));
  EXPECT_EQ(b.values.segment<10>(70), ten_statistics(x.row(7)));
}

TEST(Handcrafted, RejectsShortSeries) {
  try {
    handcrafted(Eigen::MatrixXd::Zero(3, 4));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("lag"), std::string::npos);
  }
}

TEST(SummaryCsv, HasDescriptor) {
  SummaryVector s{Eigen::Vector2d(1.5, -2.0), SummaryKind::learned};
  std::ostringstream os;
  write_csv(os, s);
  EXPECT_EQ(os.str(), "# kind=learned,dim=2\nindex,value\n0,1.5\n1,-2\n");
}
