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

#include "lmsbi/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace lmsbi {

// Binary layout, little-endian:
//   "LMNF" | u16 version | u8 summary mode | u8 statistics mode
//   | u32 dim | u32 context_dim | u32 hidden | u32 hidden_layers | u32 layers
//   | u32 embedding_input | u32 embedding_hidden (both 0 without embedding)
//   | f64 prior lower[dim] | f64 prior upper[dim]
//   | f64 theta_mean[dim] | theta_scale[dim] | context_mean[C] | context_scale[C]
//   | f64 embedding input_mean[I] | input_scale[I]
//   | u64 parameter count | f64 parameters (flow, then embedding)
inline constexpr char kFlowMagic[4] = {'L', 'M', 'N', 'F'};
inline constexpr std::uint16_t kFlowVersion = 1;

void write_checkpoint(std::ostream& out, const PosteriorBuilder& builder);
PosteriorBuilder read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const PosteriorBuilder& builder);
PosteriorBuilder load_checkpoint(const std::filesystem::path& path);

}  // namespace lmsbi
