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

#include "lmsbi/flow.hpp"
#include "lmsbi/parameters.hpp"
#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lmsbi;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

MafOptions small_options(Index dim, Index context) {
  MafOptions o;
  o.dim = dim;
  o.context_dim = context;
  o.hidden = 8;
  o.layers = 3;
  o.output_init_scale = 0.5;
  return o;
}

}  // namespace

TEST(Flow, IdentityLogProb) {
  MafOptions o;
  const auto flow = MafStackd::identity(o);
  const double origin = flow.log_prob(Matrix::Zero(3, 1), Matrix::Zero(0, 1))(0);
  EXPECT_NEAR(origin, -1.5 * std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(origin, -2.756816, 1e-6);
  const double unit = flow.log_prob(Matrix(Eigen::Vector3d(1, 0, 0)), Matrix::Zero(0, 1))(0);
  EXPECT_NEAR(unit, -3.256816, 1e-6);
}

TEST(Flow, StandardizerJacobian) {
  MafOptions o;
  o.dim = 1;
  auto flow = MafStackd::identity(o);
  flow.theta_mean(0) = 2.0;
  flow.theta_scale(0) = 0.5;
  const double x = 2.7;
  const double expect = -0.5 * std::log(2 * std::numbers::pi) - std::log(0.5) - 0.5 * std::pow((x - 2.0) / 0.5, 2);
  EXPECT_NEAR(flow.log_prob(Matrix::Constant(1, 1, x), Matrix::Zero(0, 1))(0), expect, 1e-12);
}

TEST(Flow, OneDimensionalDensityIntegratesToOne) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed);
    MafOptions o = small_options(1, 2);
    o.output_init_scale = 1.0;
    auto flow = MafStackd::random(o, rng);
    const Matrix context = Matrix::Random(2, 1);
    // Trapezoid rule on a fine grid wide enough for |log scale| <= 7 per layer
    // not to matter in practice for these weights.
    const Index points = 200001;
    const double lo = -60, hi = 60, h = (hi - lo) / (points - 1);
    Matrix grid(1, points);
    for (Index i = 0; i < points; ++i) grid(0, i) = lo + h * i;
    const Vector lp = flow.log_prob(grid, context);
    double total = 0;
    for (Index i = 0; i < points; ++i) total += (i == 0 || i == points - 1 ? 0.5 : 1.0) * std::exp(lp(i));
    EXPECT_NEAR(total * h, 1.0, 1e-3) << seed;
  }
}

TEST(Flow, IdentitySamplesAreStandardNormal) {
  const auto flow = MafStackd::identity(MafOptions{});
  Rng rng(1);
  const Matrix s = flow.sample(Matrix::Zero(0, 1), rng, 100000);
  EXPECT_LT(s.rowwise().mean().cwiseAbs().maxCoeff(), 0.02);
  const Vector var = (s.colwise() - s.rowwise().mean()).rowwise().squaredNorm() / 100000.0;
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 0.02);
}

TEST(Flow, SampleRoundTripAndDeterminism) {
  Rng init(3);
  MafOptions o = small_options(3, 4);
  o.output_init_scale = 1.0;
  auto flow = MafStackd::random(o, init);
  flow.theta_mean << 0.01, 0.01, 0.5;
  flow.theta_scale << 0.005, 0.005, 0.3;
  const Matrix context = Matrix::Random(4, 1);
  Rng a(7), b(7);
  std::normal_distribution<double> normal;
  Matrix noise(3, 500);
  for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(a);
  const Matrix samples = flow.from_noise(noise, context);
  EXPECT_LT((flow.to_noise(samples, context) - noise).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(flow.sample(context, b, 50), flow.sample(context, *std::make_unique<Rng>(7), 50));
}

TEST(Flow, AutoregressiveMasks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Index dim = 2 + static_cast<Index>(seed % 4);
    auto layer = MadeLayerd::zeros(dim, 3, 12, 1 + static_cast<Index>(seed % 3));
    layer.randomize(rng, 1.0);
    const Matrix ctx = Matrix::Random(3, 1);
    const Matrix y = Matrix::Random(dim, 1);
    Matrix shift, log_scale, shift2, log_scale2;
    layer.conditioner(y, ctx, shift, log_scale);
    for (Index j = 0; j < dim; ++j) {
      Matrix y2 = y;
      y2(j, 0) += 0.75;
      layer.conditioner(y2, ctx, shift2, log_scale2);
      for (Index i = 0; i <= j; ++i) {
        EXPECT_EQ(shift(i, 0), shift2(i, 0));
        EXPECT_EQ(log_scale(i, 0), log_scale2(i, 0));
      }
      if (j + 1 < dim) EXPECT_NE(shift.col(0).tail(dim - j - 1), shift2.col(0).tail(dim - j - 1));
    }
  }
}

TEST(Flow, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed);
    MafOptions o = small_options(3, 2);
    auto flow = MafStackd::random(o, rng);
    flow.theta_scale << 0.5, 2.0, 1.5;
    flow.context_mean << 0.1, -0.2;
    flow.context_scale << 2.0, 0.5;
    const Matrix theta = Matrix::Random(3, 6);
    const Matrix context = Matrix::Random(2, 6);
    const auto g = maf_nll_gradient(flow, theta, context);

    auto param_loss = [&](const Vector& p) {
      MafStackd tmp = flow;
      unpack(tmp, p);
      return -tmp.log_prob(theta, context).mean();
    };
    EXPECT_LT(testutil::max_relative_gradient_error(param_loss, pack(flow), pack(g.params)), 1e-5) << seed;

    const Vector c0 = context.reshaped();
    auto context_loss = [&](const Vector& c) { return -flow.log_prob(theta, c.reshaped(2, 6)).mean(); };
    EXPECT_LT(testutil::max_relative_gradient_error(context_loss, c0, g.context.reshaped()), 1e-5) << seed;
  }
}

TEST(Flow, SharedContextGradientIsSummed) {
  Rng rng(4);
  const auto flow = MafStackd::random(small_options(2, 3), rng);
  const Matrix theta = Matrix::Random(2, 5);
  const Matrix ctx = Matrix::Random(3, 1);
  const auto shared = maf_nll_gradient(flow, theta, ctx);
  const auto expanded = maf_nll_gradient(flow, theta, Matrix(ctx.replicate(1, 5)));
  EXPECT_EQ(shared.context.cols(), 1);
  EXPECT_LT((shared.context - expanded.context.rowwise().sum()).norm(), 1e-13);
}

TEST(Flow, DuplicatedBatchGivesSameGradient) {
  Rng rng(8);
  const auto flow = MafStackd::random(small_options(3, 2), rng);
  const Matrix theta = Matrix::Random(3, 4), ctx = Matrix::Random(2, 4);
  Matrix theta2(3, 8), ctx2(2, 8);
  theta2 << theta, theta;
  ctx2 << ctx, ctx;
  const auto a = maf_nll_gradient(flow, theta, ctx);
  const auto b = maf_nll_gradient(flow, theta2, ctx2);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  EXPECT_LT((pack(a.params) - pack(b.params)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Flow, EmptyBatchIsAnError) {
  const auto flow = MafStackd::identity(MafOptions{});
  EXPECT_THROW(maf_nll_gradient(flow, Matrix(3, 0), Matrix(0, 0)), ValidationError);
}

TEST(Flow, NonFiniteInputRejected) {
  const auto flow = MafStackd::identity(MafOptions{});
  Matrix theta = Matrix::Zero(3, 1);
  theta(1, 0) = std::nan("");
  EXPECT_THROW(flow.log_prob(theta, Matrix::Zero(0, 1)), NumericError);
  EXPECT_THROW(flow.log_prob(Matrix::Zero(2, 1), Matrix::Zero(0, 1)), ValidationError);
}

TEST(Flow, SelfEntropyConsistentAcrossSampleSets) {
  Rng init(12);
  MafOptions o = small_options(3, 0);
  o.output_init_scale = 0.8;
  const auto flow = MafStackd::random(o, init);
  const Matrix none(0, 1);
  Rng r1(1), r2(2);
  const Vector a = flow.log_prob(flow.sample(none, r1, 20000), none);
  const Vector b = flow.log_prob(flow.sample(none, r2, 20000), none);
  const double sd = std::sqrt((a.array() - a.mean()).square().mean());
  EXPECT_LT(std::abs(a.mean() - b.mean()), 4.0 * sd * std::sqrt(2.0 / 20000));
}
