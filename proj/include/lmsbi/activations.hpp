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

#include <Eigen/Core>

namespace lmsbi {

/// tanh through the vectorized exponential: 1 - 2 / (1 + exp(2x)).
/// Eigen's packet tanh only covers single precision.
template <typename Derived>
auto vtanh(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) - Scalar(2) / (Scalar(1) + (Scalar(2) * x).exp());
}

/// Logistic sigmoid 1 / (1 + exp(-x)).
template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x).exp()).inverse();
}

}  // namespace lmsbi
