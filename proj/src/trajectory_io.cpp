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

#include "lmsbi/trajectory_io.hpp"

#include "lmsbi/binary_io.hpp"
#include "lmsbi/errors.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <vector>

namespace lmsbi {

namespace {

void write_header(std::ostream& out, Index n, Index steps, std::uint8_t kind) {
  out.write(kTrajectoryMagic, 4);
  binio::put<std::uint16_t>(out, kTrajectoryVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(steps));
  binio::put<std::uint8_t>(out, kind);
}

void check_macro_shape(const MacroTrajectory& traj) {
  if (traj.data.cols() == 0 || traj.data.cols() % 4 != 0)
    throw ValidationError("macro trajectory width must be a positive multiple of 4");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_trajectory(std::ostream& out, const MacroTrajectory& traj) {
  check_macro_shape(traj);
  write_header(out, traj.occupations(), traj.steps(), 0);
  std::vector<double> row(static_cast<std::size_t>(traj.data.cols()));
  for (Index t = 0; t < traj.steps(); ++t) {
    Eigen::Map<Eigen::RowVectorXd>(row.data(), traj.data.cols()) = traj.data.row(t);
    binio::put_doubles(out, row.data(), row.size());
  }
}

void write_trajectory(std::ostream& out, const MicroTrajectory& traj) {
  const MacroTrajectory& macro = traj.indicators;
  check_macro_shape(macro);
  const Index n = macro.occupations();
  if (static_cast<Index>(traj.transitions.size()) != macro.steps())
    throw ValidationError("micro trajectory has mismatched step counts");
  write_header(out, n, macro.steps(), 1);
  std::vector<double> row(static_cast<std::size_t>(n + 4));
  for (Index t = 0; t < macro.steps(); ++t) {
    const MatrixXc& j = traj.transitions[static_cast<std::size_t>(t)];
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < n; ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(j(i, k));
      for (Index c = 0; c < 4; ++c) row[static_cast<std::size_t>(n + c)] = macro.data(t, c * n + i);
      binio::put_doubles(out, row.data(), row.size());
    }
  }
}

void save_trajectory(const std::filesystem::path& path, const MacroTrajectory& traj) {
  auto out = open_out(path);
  write_trajectory(out, traj);
}

void save_trajectory(const std::filesystem::path& path, const MicroTrajectory& traj) {
  auto out = open_out(path);
  write_trajectory(out, traj);
}

AnyTrajectory read_trajectory(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTrajectoryMagic, 4) != 0)
    throw ValidationError("not a trajectory file (bad magic)");
  const auto version = binio::get<std::uint16_t>(in);
  if (version != kTrajectoryVersion)
    throw ValidationError("unsupported trajectory format version " + std::to_string(version));
  const Index n = binio::get<std::uint32_t>(in);
  const Index steps = binio::get<std::uint32_t>(in);
  const auto kind = binio::get<std::uint8_t>(in);
  if (n == 0 || steps == 0) throw ValidationError("trajectory has an empty dimension");

  if (kind == 0) {
    MacroTrajectory traj{Eigen::MatrixXd(steps, 4 * n)};
    std::vector<double> row(static_cast<std::size_t>(4 * n));
    for (Index t = 0; t < steps; ++t) {
      binio::get_doubles(in, row.data(), row.size());
      traj.data.row(t) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), 4 * n);
    }
    return traj;
  }
  if (kind == 1) {
    MicroTrajectory traj;
    traj.indicators.data.resize(steps, 4 * n);
    traj.transitions.assign(static_cast<std::size_t>(steps), MatrixXc::Zero(n, n));
    std::vector<double> row(static_cast<std::size_t>(n + 4));
    for (Index t = 0; t < steps; ++t) {
      for (Index i = 0; i < n; ++i) {
        binio::get_doubles(in, row.data(), row.size());
        for (Index k = 0; k < n; ++k)
          traj.transitions[static_cast<std::size_t>(t)](i, k) = std::llround(row[static_cast<std::size_t>(k)]);
        for (Index c = 0; c < 4; ++c) traj.indicators.data(t, c * n + i) = row[static_cast<std::size_t>(n + c)];
      }
    }
    return traj;
  }
  throw ValidationError("unknown trajectory kind " + std::to_string(kind));
}

AnyTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open trajectory " + path.string());
  return read_trajectory(in);
}

MacroTrajectory load_macro(const std::filesystem::path& path) {
  auto any = load_trajectory(path);
  if (auto* macro = std::get_if<MacroTrajectory>(&any)) return std::move(*macro);
  return std::get<MicroTrajectory>(std::move(any)).indicators;
}

namespace {

void indicator_header(std::ostream& out, Index n) {
  for (const char* name : {"e", "u", "v", "d"})
    for (Index i = 1; i <= n; ++i) out << ',' << name << '_' << i;
}

void indicator_row(std::ostream& out, const MacroTrajectory& traj, Index t) {
  for (Index c = 0; c < traj.data.cols(); ++c) out << ',' << traj.data(t, c);
}

}  // namespace

void write_csv(std::ostream& out, const MacroTrajectory& traj) {
  check_macro_shape(traj);
  const auto old = out.precision(17);
  out << 't';
  indicator_header(out, traj.occupations());
  out << '\n';
  for (Index t = 0; t < traj.steps(); ++t) {
    out << t;
    indicator_row(out, traj, t);
    out << '\n';
  }
  out.precision(old);
}

void write_csv(std::ostream& out, const MicroTrajectory& traj) {
  const MacroTrajectory& macro = traj.indicators;
  check_macro_shape(macro);
  const Index n = macro.occupations();
  const auto old = out.precision(17);
  out << 't';
  for (Index i = 1; i <= n; ++i)
    for (Index k = 1; k <= n; ++k) out << ",J_" << i << '_' << k;
  indicator_header(out, n);
  out << '\n';
  for (Index t = 0; t < macro.steps(); ++t) {
    out << t;
    const MatrixXc& j = traj.transitions[static_cast<std::size_t>(t)];
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < n; ++k) out << ',' << j(i, k);
    indicator_row(out, macro, t);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace lmsbi
