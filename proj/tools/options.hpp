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

#include "manifest.hpp"

#include "lmsbi/market.hpp"
#include "lmsbi/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <string>

namespace lmsbi::cli {

struct SimOptions {
  int steps = 600;
  int shock_at = kDefaultShockStep;  // negative disables the shock
  std::string shock_mode = "step";
  double half_width = 10.0;
  double gamma_u = 0.1;
  double gamma_v = 0.1;
  int burn_in = 0;
  int vacancy_lifetime = 0;  // 0 keeps vacancies open until filled

  SimulationConfig resolve() const;
};

void add_sim_options(CLI::App* app, SimOptions& o);

struct TrainOptions {
  double learning_rate = 5e-4;
  Index batch_size = 50;
  double validation_fraction = 0.1;
  int patience = 20;
  int max_epochs = 500;
  Index hidden = 50;
  Index flow_layers = 5;
  Index embedding_hidden = 32;
  std::string summaries = "handcrafted";
  std::string statistics = "per_series";

  FitOptions resolve(std::uint64_t seed) const;
};

void add_train_options(CLI::App* app, TrainOptions& o);

/// Resolved value of every option of `app` (flag names without dashes),
/// suitable for replay through --config.
nlohmann::json resolved_parameters(const CLI::App* app);

/// Prints "label: done/total" to stderr about every 5%.
std::function<void(Index, Index)> progress_printer(std::string label);

void ensure_directory(const std::filesystem::path& dir);

void register_commands(CLI::App& app);

}  // namespace lmsbi::cli
