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

#include "lmsbi/analysis.hpp"
#include "lmsbi/errors.hpp"
#include "lmsbi/simulator.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace lmsbi {
namespace {

TEST(Correlation, DuplicatedRowsCorrelateFully) {
  Eigen::MatrixXd s = sample_prior(PriorBox::defaults(), 500, 1);
  s.row(1) = 3.0 * s.row(0).array() + 2.0;
  const auto c = posterior_correlation(s);
  EXPECT_NEAR(c.matrix(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(c.matrix(1, 0), 1.0, 1e-12);
  s.row(1) = -s.row(0);
  EXPECT_NEAR(posterior_correlation(s).matrix(0, 1), -1.0, 1e-12);
}

TEST(Correlation, IndependentDrawsAreNearZero) {
  const auto c = posterior_correlation(sample_prior(PriorBox::defaults(), 100000, 2));
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(c.matrix(i, i), 1.0);
    for (Index j = 0; j < 3; ++j) {
      EXPECT_EQ(c.matrix(i, j), c.matrix(j, i));
      if (i != j) EXPECT_LT(std::abs(c.matrix(i, j)), 0.02);
    }
  }
  EXPECT_TRUE(c.warnings.empty());
}

TEST(Correlation, ZeroVarianceGivesZeroWithWarning) {
  Eigen::MatrixXd s = sample_prior(PriorBox::defaults(), 100, 3);
  s.row(2).setConstant(0.55);
  const auto c = posterior_correlation(s);
  EXPECT_EQ(c.matrix(2, 0), 0.0);
  EXPECT_EQ(c.matrix(1, 2), 0.0);
  EXPECT_EQ(c.matrix(2, 2), 1.0);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_THROW(posterior_correlation(Eigen::MatrixXd::Zero(3, 1)), ValidationError);
}

TEST(Hdr, SelectionKeepsTheDensest) {
  Rng rng = make_rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd cand(2, 400);
  Eigen::VectorXd lp(400);
  for (Index j = 0; j < 400; ++j) {
    cand.col(j) << g(rng), g(rng);
    lp(j) = g(rng);
  }
  const auto h = hdr_select(cand, lp, 30);
  ASSERT_EQ(h.selected.cols(), 30);
  EXPECT_EQ(h.discarded_log_prob.size(), 370);
  EXPECT_GE(h.selected_log_prob.minCoeff(), h.discarded_log_prob.maxCoeff());
  for (Index j = 1; j < 30; ++j) EXPECT_GE(h.selected_log_prob(j - 1), h.selected_log_prob(j));
  Index top = 0;
  lp.maxCoeff(&top);
  EXPECT_EQ(h.selected.col(0), cand.col(top));
  const auto again = hdr_select(cand, lp, 30);
  EXPECT_EQ(again.selected, h.selected);
  EXPECT_THROW(hdr_select(cand, lp, 401), ValidationError);
}

TEST(Hdr, IdentityFlowSelectsNearTheGridMode) {
  MafOptions opt;
  opt.dim = 2;
  opt.context_dim = 1;
  auto flow = std::make_shared<const MafStackd>(MafStackd::identity(opt));
  const MafPosterior post(flow, Eigen::VectorXd::Constant(1, 0.3), PriorBox{Eigen::Vector2d(-3, -2), Eigen::Vector2d(3, 4)});

  Eigen::Vector2d mode;
  double best = -INFINITY;
  for (double a = -3; a <= 3 + 1e-9; a += 0.25)
    for (double b = -2; b <= 4 + 1e-9; b += 0.25) {
      const double lp = post.log_prob(Eigen::Vector2d(a, b));
      if (lp > best) {
        best = lp;
        mode = {a, b};
      }
    }
  const auto h = hdr_sample(post, 100, 9);
  ASSERT_EQ(h.selected.cols(), 100);
  EXPECT_EQ(h.discarded_log_prob.size(), 1900);
  EXPECT_GE(h.selected_log_prob.minCoeff(), h.discarded_log_prob.maxCoeff());
  // Top 5% of a standard bivariate normal lies within radius sqrt(-2 ln 0.95) = 0.32.
  for (Index j = 0; j < 100; ++j) EXPECT_LT((h.selected.col(j) - mode).norm(), 0.45);
  EXPECT_LT((h.selected.rowwise().mean() - mode).norm(), 0.1);
}

TEST(KMeans, SeparatedBlobsAreRecovered) {
  Rng rng = make_rng(5);
  std::normal_distribution<double> g(0, 0.1);
  Eigen::MatrixXd pts(90, 2);
  const double centres[3][2] = {{5, 0}, {-5, 0}, {0, 5}};
  for (Index i = 0; i < 90; ++i) pts.row(i) << centres[i % 3][0] + g(rng), centres[i % 3][1] + g(rng);
  const auto km = kmeans(pts, 3, 10, 1);
  ASSERT_EQ(km.labels.size(), 90u);
  // Relabelled by ascending first centroid coordinate.
  EXPECT_LT(km.centroids(0, 0), km.centroids(1, 0));
  EXPECT_LT(km.centroids(1, 0), km.centroids(2, 0));
  for (Index i = 0; i < 90; ++i) EXPECT_EQ(km.labels[static_cast<std::size_t>(i)], (std::array<Index, 3>{2, 0, 1})[i % 3]);
  EXPECT_EQ(kmeans(pts, 3, 10, 1).labels, km.labels);
}

TEST(KMeans, IdenticalPointsCollapse) {
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Constant(20, 3, 0.7);
  const auto km = kmeans(pts, 3, 5, 2);
  std::set<Index> used(km.labels.begin(), km.labels.end());
  EXPECT_EQ(used.size(), 1u);
  EXPECT_LT(km.inertia, 1e-20);
  for (Index c = 0; c < 3; ++c) EXPECT_TRUE(km.centroids.row(c).isApprox(pts.row(0), 1e-14));
}

MarketSpec small_market() {
  SynthConfig cfg;
  cfg.occupations = 8;
  cfg.workers_per_occupation = 60;
  cfg.seed = 6;
  return generate_market(cfg);
}

TEST(PatternFeatures, CountsMatchTheTrajectory) {
  const MarketSpec spec = small_market();
  SimulationConfig sim;
  sim.steps = 50;
  sim.shock_step = 10;
  sim.seed = 3;
  const auto micro = simulate_micro(spec, {0.015, 0.01, 0.55}, sim);
  const Eigen::Vector3d f = pattern_features(micro, spec, 10);
  EXPECT_GT(f(0), 0.0);
  EXPECT_GT(f(1), 0.0);
  EXPECT_LE(f(2), std::min(f(0), f(1)) + 1e-15);

  // Direct recount at one step.
  const Index n = spec.occupations();
  double gain = 0;
  for (Index j = 0; j < n; ++j)
    gain += static_cast<double>(micro.transitions[20].col(j).sum()) / static_cast<double>(spec.workforce(j));
  const auto one = pattern_features(
      MicroTrajectory{{micro.transitions.begin(), micro.transitions.begin() + 21},
                      MacroTrajectory{micro.indicators.data.topRows(21)}},
      spec, 20);
  EXPECT_NEAR(one(0), gain / static_cast<double>(n), 1e-15);
  EXPECT_THROW(pattern_features(micro, spec, 50), ValidationError);
}

TEST(PatternCluster, IdenticalQuietRunsFormOneCluster) {
  const MarketSpec spec = small_market();
  SimulationConfig sim;
  sim.steps = 30;
  const Eigen::MatrixXd params = Eigen::MatrixXd::Zero(3, 12);
  ClusterConfig cfg;
  cfg.restarts = 5;
  const auto r = pattern_cluster(spec, sim, params, cfg);
  ASSERT_EQ(r.labels.size(), 12u);
  std::set<Index> used(r.labels.begin(), r.labels.end());
  EXPECT_EQ(used.size(), 1u);
  EXPECT_EQ(*std::max_element(r.sizes.begin(), r.sizes.end()), 12);
}

TEST(PatternCluster, LabelsCoverCompletedRunsAndRIsFixed) {
  const MarketSpec spec = small_market();
  SimulationConfig sim;
  sim.steps = 60;
  sim.shock_step = 20;
  const Eigen::MatrixXd params = sample_prior(PriorBox::defaults(), 15, 7);
  ClusterConfig cfg;
  cfg.restarts = 10;
  const auto r = pattern_cluster(spec, sim, params, cfg);
  ASSERT_EQ(r.labels.size(), 15u);
  EXPECT_TRUE(r.failures.empty());
  for (Index l : r.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LE(l, 2);
  }
  EXPECT_TRUE((r.theta.row(2).array() == 0.55).all());
  Index total = 0;
  for (Index s : r.sizes) total += s;
  EXPECT_EQ(total, 15);
  std::stringstream csv;
  write_csv(csv, r);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "run,delta_u,delta_v,r,gain,loss,co_occurrence,label");
}

TEST(LinearFitTest, ExactLineHasUnitRSquared) {
  const LinearFit f = fit_line({10, 35, 60, 110, 160}, {1.5, 4.0, 6.5, 11.5, 16.5});
  ASSERT_TRUE(f.defined);
  EXPECT_NEAR(f.slope, 0.1, 1e-12);
  EXPECT_NEAR(f.intercept, 0.5, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(LinearFitTest, DegenerateInputsAreUndefined) {
  EXPECT_FALSE(fit_line({3}, {1}).defined);
  EXPECT_FALSE(fit_line({3, 3}, {1, 2}).defined);
  EXPECT_TRUE(std::isnan(pearson({1, 2, 3}, {5, 5, 5})));
  EXPECT_NEAR(pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-12);
}

TEST(Summarize, SingleNIsFlagged) {
  BenchResult r;
  for (Index rep = 0; rep < 3; ++rep) {
    r.records.push_back({10, BenchPhase::simulation, rep, 1.0 + static_cast<double>(rep), -1});
    r.records.push_back({10, BenchPhase::training, rep, 2.0 * static_cast<double>(rep + 1), static_cast<int>(10 * (rep + 1))});
  }
  summarize(r);
  EXPECT_FALSE(r.simulation_fit.defined);
  EXPECT_EQ(r.simulation_fit.note, "single n value");
  ASSERT_TRUE(r.training_epoch_correlation.has_value());
  EXPECT_NEAR(*r.training_epoch_correlation, 1.0, 1e-12);
  std::stringstream js;
  write_fit_json(js, r);
  const auto j = nlohmann::json::parse(js.str());
  EXPECT_FALSE(j["simulation_fit"]["defined"].get<bool>());
  EXPECT_EQ(j["training_time_epochs_pearson_reference"], 0.93);
}

TEST(BenchScaling, RecordShapesAreReproducible) {
  BenchConfig cfg;
  cfg.repetitions = 2;
  cfg.simulations = 60;
  cfg.sim.steps = 20;
  cfg.fit.flow.hidden = 8;
  cfg.fit.flow.layers = 1;
  cfg.fit.train.max_epochs = 2;
  const auto r = bench_scaling({4, 6}, cfg);
  ASSERT_EQ(r.records.size(), 8u);
  EXPECT_TRUE(r.failures.empty());
  for (const auto& rec : r.records) {
    EXPECT_GT(rec.seconds, 0.0);
    EXPECT_EQ(rec.epochs >= 0, rec.phase == BenchPhase::training);
  }
  EXPECT_TRUE(r.simulation_fit.defined);
  std::stringstream csv;
  write_csv(csv, r);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "n,phase,rep,seconds,epochs");
  EXPECT_THROW(bench_scaling({6, 4}, cfg), ValidationError);
}

TEST(Svg, IsSelfContained) {
  std::stringstream s;
  write_svg(s, {{"sim <mean>", {10, 20, 30}, {1, 2, 3}, true}}, "time vs n", "n", "seconds");
  const std::string svg = s.str();
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("sim &lt;mean&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("http://", svg.find("xmlns") + 40), std::string::npos);
}

}  // namespace
}  // namespace lmsbi
