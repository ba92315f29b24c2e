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

#include <Eigen/Dense>

namespace lmsbi {

// Flat views over any type exposing for_each_parameter(f), where f receives
// each dense parameter block in a fixed order.

template <typename Params>
Eigen::Index parameter_count(const Params& p) {
  Eigen::Index n = 0;
  p.for_each_parameter([&](const auto& m) { n += m.size(); });
  return n;
}

template <typename Params>
Eigen::VectorXd pack(const Params& p) {
  Eigen::VectorXd out(parameter_count(p));
  Eigen::Index at = 0;
  p.for_each_parameter([&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) out(at++) = static_cast<double>(m.data()[i]);
  });
  return out;
}

template <typename Params>
void unpack(Params& p, const Eigen::Ref<const Eigen::VectorXd>& flat) {
  Eigen::Index at = 0;
  p.for_each_parameter([&](auto& m) {
    using Scalar = typename std::decay_t<decltype(m)>::Scalar;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(flat(at++));
  });
  if constexpr (requires { p.apply_masks(); }) p.apply_masks();
}

}  // namespace lmsbi
