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
#include "lmsbi/synth.hpp"

#include <gtest/gtest.h>

using namespace lmsbi;

TEST(GenerateMarket, RowsAreStochastic) {
  for (Index n : {1, 2, 3, 10, 37, 100}) {
    for (double eps : {0.0, 1e-3, 0.5}) {
      SynthConfig cfg;
      cfg.occupations = n;
      cfg.smoothing_epsilon = eps;
      cfg.seed = static_cast<std::uint64_t>(n);
      const MarketSpec spec = generate_market(cfg);
      EXPECT_NO_THROW(validate(spec));
      for (Index i = 0; i < n; ++i) EXPECT_NEAR(spec.transition.row(i).sum(), 1.0, 1e-9);
      EXPECT_EQ(spec.total_workforce(), n * cfg.workers_per_occupation);
      EXPECT_TRUE((spec.automation_prob.array() >= 0.0).all());
      EXPECT_TRUE((spec.automation_prob.array() <= cfg.p_max).all());
      if (eps > 0) EXPECT_TRUE((spec.transition.array() > 0.0).all());
    }
  }
}

TEST(GenerateMarket, Deterministic) {
  SynthConfig cfg;
  cfg.occupations = 10;
  cfg.seed = 7;
  const MarketSpec a = generate_market(cfg);
  const MarketSpec b = generate_market(cfg);
  EXPECT_EQ(a.transition, b.transition);
  EXPECT_EQ(a.automation_prob, b.automation_prob);
  cfg.seed = 8;
  EXPECT_NE(generate_market(cfg).automation_prob, a.automation_prob);
}

TEST(GenerateMarket, IntraBlockMass) {
  SynthConfig cfg;
  cfg.occupations = 10;
  cfg.block_count = 2;
  cfg.intra_block_mass = 0.8;
  cfg.smoothing_epsilon = 0.0;
  const MarketSpec spec = generate_market(cfg);
  const Eigen::VectorXi block = block_assignment(10, 2);
  double total = 0;
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j)
      if (block(i) == block(j)) total += spec.transition(i, j);
  EXPECT_NEAR(total / 10.0, 0.8, 1e-12);
}

TEST(GenerateMarket, RemainderJoinsLastBlock) {
  const Eigen::VectorXi b = block_assignment(7, 3);
  EXPECT_EQ(b, (Eigen::VectorXi(7) << 0, 0, 1, 1, 2, 2, 2).finished());
}

TEST(GenerateMarket, RejectsInvalidConfig) {
  SynthConfig cfg;
  cfg.occupations = 0;
  EXPECT_THROW(generate_market(cfg), ValidationError);
  cfg.occupations = 4;
  cfg.block_count = 5;
  EXPECT_THROW(generate_market(cfg), ValidationError);
  cfg.block_count = 2;
  cfg.intra_block_mass = 1.0;
  EXPECT_THROW(generate_market(cfg), ValidationError);
  cfg.intra_block_mass = 0.5;
  cfg.p_max = 1.5;
  EXPECT_THROW(generate_market(cfg), ValidationError);
}
