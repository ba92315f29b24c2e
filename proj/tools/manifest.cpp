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

#include "manifest.hpp"

#include "lmsbi/checkpoint.hpp"
#include "lmsbi/hash.hpp"
#include "lmsbi/trajectory_io.hpp"

#include <fstream>

namespace lmsbi::cli {

RunManifest::RunManifest(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {}

void RunManifest::set_config(const std::string& path) { config_ = path; }

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

nlohmann::json RunManifest::to_json() const {
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : paths) out.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    return out;
  };
  nlohmann::json j;
  j["manifest_version"] = kManifestVersion;
  j["tool"] = "lmsbi";
  j["tool_version"] = kToolVersion;
  j["formats"] = {{"trajectory", kTrajectoryVersion}, {"flow_checkpoint", kFlowVersion}};
  j["command"] = command_;
  j["config"] = config_.empty() ? nlohmann::json() : nlohmann::json(config_);
  j["seed"] = seed_;
  j["parameters"] = parameters_;
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  return j;
}

std::filesystem::path RunManifest::write(const std::filesystem::path& path) const {
  const nlohmann::json j = to_json();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  return path;
}

}  // namespace lmsbi::cli
