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

#include "lmsbi/market.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

namespace lmsbi {

// Binary layout, little-endian:
//   "LMTR" | u16 version | u32 n | u32 T | u8 kind (0 macro, 1 micro) | f64 payload
// Macro payload: T rows of e_1..e_n u_1..u_n v_1..v_n d_1..d_n.
// Micro payload: for each t, for each i: J_t[i][0..n-1] then e_i u_i v_i d_i.
inline constexpr char kTrajectoryMagic[4] = {'L', 'M', 'T', 'R'};
inline constexpr std::uint16_t kTrajectoryVersion = 1;

void write_trajectory(std::ostream& out, const MacroTrajectory& traj);
void write_trajectory(std::ostream& out, const MicroTrajectory& traj);
void save_trajectory(const std::filesystem::path& path, const MacroTrajectory& traj);
void save_trajectory(const std::filesystem::path& path, const MicroTrajectory& traj);

using AnyTrajectory = std::variant<MacroTrajectory, MicroTrajectory>;

AnyTrajectory read_trajectory(std::istream& in);
AnyTrajectory load_trajectory(const std::filesystem::path& path);

/// Loads a trajectory file and returns its macro indicators.
MacroTrajectory load_macro(const std::filesystem::path& path);

/// One row per step; header "t,e_1,..,d_n" (micro adds J_i_j columns first).
void write_csv(std::ostream& out, const MacroTrajectory& traj);
void write_csv(std::ostream& out, const MicroTrajectory& traj);

}  // namespace lmsbi
