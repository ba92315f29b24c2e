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

#include "lmsbi/estimator.hpp"

#include "lmsbi/parameters.hpp"

namespace lmsbi {

Eigen::MatrixXd ConditionalEstimator::context(const std::vector<const Matrix*>& inputs,
                                              RecurrentEmbeddingd::Cache* cache) const {
  if (embedding) return embedding->forward_batch(inputs, cache);
  Matrix out(flow.context_dim(), static_cast<Index>(inputs.size()));
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const Matrix& x = *inputs[b];
    if (x.cols() != 1 || x.rows() != flow.context_dim())
      throw ValidationError("summary input has shape " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + ", expected " + std::to_string(flow.context_dim()) + "x1");
    out.col(static_cast<Index>(b)) = x;
  }
  return out;
}

Eigen::VectorXd ConditionalEstimator::log_prob(const Matrix& theta, const std::vector<const Matrix*>& inputs) const {
  return flow.log_prob(theta, context(inputs));
}

double ConditionalEstimator::nll_gradient(const Matrix& theta, const std::vector<const Matrix*>& inputs,
                                          Vector& gradient, RecurrentEmbeddingd::Cache* workspace) const {
  RecurrentEmbeddingd::Cache local;
  RecurrentEmbeddingd::Cache& cache = workspace ? *workspace : local;
  const Matrix ctx = context(inputs, embedding ? &cache : nullptr);
  auto g = maf_nll_gradient(flow, theta, ctx);
  ConditionalEstimator grad{std::move(g.params), std::nullopt};
  if (embedding) grad.embedding = embedding->backward_batch(cache, g.context);
  gradient = pack(grad);
  return g.loss;
}

}  // namespace lmsbi
