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

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lmsbi::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

/// Record of one command invocation. Every listed file carries a SHA-256 of
/// its content, taken when the manifest is written.
class RunManifest {
 public:
  RunManifest(std::string command, std::uint64_t seed);

  void set_config(const std::string& path);
  nlohmann::json& parameters() { return parameters_; }
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void note(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  nlohmann::json to_json() const;
  /// Writes the manifest and returns its path.
  std::filesystem::path write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::uint64_t seed_;
  std::string config_;
  nlohmann::json parameters_ = nlohmann::json::object();
  nlohmann::json extra_ = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs_, outputs_;
};

}  // namespace lmsbi::cli
