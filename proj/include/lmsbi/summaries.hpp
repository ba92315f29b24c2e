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
#include "lmsbi/errors.hpp"
#include "lmsbi/market.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

namespace lmsbi {

enum class SummaryKind { handcrafted_per_series, handcrafted_per_step, learned };

const char* to_string(SummaryKind kind);

struct SummaryVector {
  Eigen::VectorXd values;
  SummaryKind kind = SummaryKind::handcrafted_per_series;

  Index dim() const { return values.size(); }
};

/// CSV with a "# kind=<..>,dim=<..>" descriptor line then one value per row.
void write_csv(std::ostream& out, const SummaryVector& summary);

enum class StatisticsMode { per_series, per_step };

inline constexpr Index kStatisticsPerSequence = 10;

/// Quantile by linear interpolation between the closest order statistics of
/// an already sorted sequence.
template <typename Scalar>
Scalar sorted_quantile(const std::vector<Scalar>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + static_cast<Scalar>(h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// min, max, mean, variance, Q.25, Q.5, Q.75, acf lag 1, 2, 3.
///
/// Variance is the population variance. Autocorrelations use
/// sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2 and are defined as 0 for
/// a zero-variance sequence.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, kStatisticsPerSequence, 1> ten_statistics(
    const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index len = x.size();
  if (len < 4) throw ValidationError("ten statistics need at least 4 values (autocorrelation up to lag 3)");

  std::vector<Scalar> sorted(static_cast<std::size_t>(len));
  for (Index i = 0; i < len; ++i) sorted[static_cast<std::size_t>(i)] = x(i);
  std::sort(sorted.begin(), sorted.end());

  const Scalar mean = x.sum() / static_cast<Scalar>(len);
  Scalar ss = 0;
  for (Index i = 0; i < len; ++i) ss += (x(i) - mean) * (x(i) - mean);

  Eigen::Matrix<Scalar, kStatisticsPerSequence, 1> out;
  out(0) = sorted.front();
  out(1) = sorted.back();
  out(2) = mean;
  out(3) = ss / static_cast<Scalar>(len);
  out(4) = sorted_quantile(sorted, 0.25);
  out(5) = sorted_quantile(sorted, 0.50);
  out(6) = sorted_quantile(sorted, 0.75);

  const Scalar scale = std::max<Scalar>(Scalar(1), mean * mean);
  const bool degenerate = out(3) <= Scalar(1e-12) * scale;
  for (Index k = 1; k <= 3; ++k) {
    if (degenerate) {
      out(6 + k) = 0;
      continue;
    }
    Scalar acc = 0;
    for (Index t = 0; t + k < len; ++t) acc += (x(t) - mean) * (x(t + k) - mean);
    out(6 + k) = acc / ss;
  }
  return out;
}

/// Rearranges the indicator blocks [S_1 .. S_T] (n x 4T, S_t = [e u v d]) into
/// the T x 4n matrix whose row t is e_1..e_n u_1..u_n v_1..v_n d_1..d_n.
Eigen::MatrixXd reshape_macro(const Eigen::Ref<const Eigen::MatrixXd>& blocks);

/// Inverse of reshape_macro.
Eigen::MatrixXd indicator_blocks(const Eigen::Ref<const Eigen::MatrixXd>& reshaped);

/// The stored trajectory already is in reshaped layout; this validates it.
const Eigen::MatrixXd& reshape_macro(const MacroTrajectory& traj);

/// Ten statistics per column (length 40n for a T x 4n input) or per row
/// (length 10T).
SummaryVector handcrafted(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          StatisticsMode mode = StatisticsMode::per_series);

/// Final hidden state of the recurrent embedding run over x.
SummaryVector embed(const RecurrentEmbeddingd& emb, const Eigen::MatrixXd& x);

}  // namespace lmsbi
