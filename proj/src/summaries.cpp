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

#include "lmsbi/summaries.hpp"

#include <ostream>

namespace lmsbi {

const char* to_string(SummaryKind kind) {
  switch (kind) {
    case SummaryKind::handcrafted_per_series: return "handcrafted_per_series";
    case SummaryKind::handcrafted_per_step: return "handcrafted_per_step";
    case SummaryKind::learned: return "learned";
  }
  return "unknown";
}

void write_csv(std::ostream& out, const SummaryVector& summary) {
  const auto old = out.precision(17);
  out << "# kind=" << to_string(summary.kind) << ",dim=" << summary.dim() << '\n';
  out << "index,value\n";
  for (Index i = 0; i < summary.dim(); ++i) out << i << ',' << summary.values(i) << '\n';
  out.precision(old);
}

Eigen::MatrixXd reshape_macro(const Eigen::Ref<const Eigen::MatrixXd>& blocks) {
  const Index n = blocks.rows();
  if (n == 0 || blocks.cols() == 0 || blocks.cols() % 4 != 0)
    throw ValidationError("indicator blocks must be n x 4T with n, T >= 1");
  const Index steps = blocks.cols() / 4;
  Eigen::MatrixXd out(steps, 4 * n);
  for (Index t = 0; t < steps; ++t)
    for (Index c = 0; c < 4; ++c) out.block(t, c * n, 1, n) = blocks.col(4 * t + c).transpose();
  return out;
}

Eigen::MatrixXd indicator_blocks(const Eigen::Ref<const Eigen::MatrixXd>& reshaped) {
  if (reshaped.rows() == 0 || reshaped.cols() == 0 || reshaped.cols() % 4 != 0)
    throw ValidationError("reshaped trajectory must be T x 4n with n, T >= 1");
  const Index steps = reshaped.rows();
  const Index n = reshaped.cols() / 4;
  Eigen::MatrixXd out(n, 4 * steps);
  for (Index t = 0; t < steps; ++t)
    for (Index c = 0; c < 4; ++c) out.col(4 * t + c) = reshaped.block(t, c * n, 1, n).transpose();
  return out;
}

const Eigen::MatrixXd& reshape_macro(const MacroTrajectory& traj) {
  if (traj.data.rows() == 0 || traj.data.cols() == 0 || traj.data.cols() % 4 != 0)
    throw ValidationError("macro trajectory must be T x 4n with n, T >= 1");
  return traj.data;
}

SummaryVector handcrafted(const Eigen::Ref<const Eigen::MatrixXd>& x, StatisticsMode mode) {
  SummaryVector out;
  if (mode == StatisticsMode::per_series) {
    if (x.rows() < 4) throw ValidationError("per-series statistics need T >= 4 (autocorrelation up to lag 3)");
    out.kind = SummaryKind::handcrafted_per_series;
    out.values.resize(kStatisticsPerSequence * x.cols());
    for (Index c = 0; c < x.cols(); ++c)
      out.values.segment<kStatisticsPerSequence>(kStatisticsPerSequence * c) = ten_statistics(x.col(c));
  } else {
    if (x.cols() < 4) throw ValidationError("per-step statistics need at least 4 columns (lag 3)");
    out.kind = SummaryKind::handcrafted_per_step;
    out.values.resize(kStatisticsPerSequence * x.rows());
    for (Index t = 0; t < x.rows(); ++t)
      out.values.segment<kStatisticsPerSequence>(kStatisticsPerSequence * t) = ten_statistics(x.row(t));
  }
  if (!out.values.allFinite()) throw NumericError("summary statistics produced non-finite values");
  return out;
}

SummaryVector embed(const RecurrentEmbeddingd& emb, const Eigen::MatrixXd& x) {
  SummaryVector out{emb.forward(x), SummaryKind::learned};
  if (!out.values.allFinite()) throw NumericError("non-finite embedding output");
  return out;
}

}  // namespace lmsbi
