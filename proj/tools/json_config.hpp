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

#include <CLI11.hpp>
#include <json.hpp>

#include <istream>
#include <string>
#include <vector>

namespace lmsbi::cli {

/// CLI11 config reader for JSON. Accepts either nested objects keyed by
/// subcommand ({"simulate": {"steps": 600}}) or a run manifest, whose
/// "parameters" are replayed under its "command".
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    if (j.contains("parameters") && j.contains("command") && j["command"].is_string()) {
      std::vector<std::string> parents;
      std::string command = j["command"].get<std::string>();
      for (std::size_t at; (at = command.find(' ')) != std::string::npos; command = command.substr(at + 1))
        parents.push_back(command.substr(0, at));
      parents.push_back(command);
      for (std::size_t level = 1; level <= parents.size(); ++level) open(parents, level, items);
      collect(j["parameters"], parents, items);
    } else {
      collect(j, {}, items);
    }
    return items;
  }

 private:
  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_null()) continue;
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        open(sub, sub.size(), items);
        collect(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (value.is_boolean()) {
        item.inputs = {value.get<bool>() ? "true" : "false"};
      } else {
        item.inputs = {scalar(value)};
      }
      items.push_back(std::move(item));
    }
  }

  // Marks a subcommand as used so its callback runs without a command-line mention.
  static void open(const std::vector<std::string>& path, std::size_t level, std::vector<CLI::ConfigItem>& items) {
    CLI::ConfigItem item;
    item.parents.assign(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(level));
    item.name = "++";
    items.push_back(std::move(item));
  }

  static std::string scalar(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }
};

}  // namespace lmsbi::cli
