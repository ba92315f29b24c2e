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

#include "lmsbi/embedding.hpp"
#include "lmsbi/flow.hpp"

#include <optional>
#include <vector>

namespace lmsbi {

/// Conditional density estimator q(theta | x). Without an embedding each
/// conditioning input is a C x 1 summary column; with one it is a T x I
/// sequence that the recurrent embedding reduces to the flow context.
struct ConditionalEstimator {
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  MafStackd flow;
  std::optional<RecurrentEmbeddingd> embedding;

  /// Flow context for a batch of conditioning inputs, one column per input.
  Matrix context(const std::vector<const Matrix*>& inputs, RecurrentEmbeddingd::Cache* cache = nullptr) const;

  Vector log_prob(const Matrix& theta, const std::vector<const Matrix*>& inputs) const;

  /// Mean negative log-density of the batch and its gradient in pack() order.
  /// A workspace cache, when given, is reused across calls.
  double nll_gradient(const Matrix& theta, const std::vector<const Matrix*>& inputs, Vector& gradient,
                      RecurrentEmbeddingd::Cache* workspace = nullptr) const;

  template <typename F>
  void for_each_parameter(F&& f) {
    flow.for_each_parameter(f);
    if (embedding) embedding->for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    flow.for_each_parameter(f);
    if (embedding) embedding->for_each_parameter(f);
  }
  void apply_masks() { flow.apply_masks(); }
};

}  // namespace lmsbi
