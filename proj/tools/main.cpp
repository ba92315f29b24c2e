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

#include "json_config.hpp"
#include "options.hpp"

#include "lmsbi/errors.hpp"
#include "lmsbi/checkpoint.hpp"
#include "lmsbi/trajectory_io.hpp"

#include <iostream>
#include <memory>

namespace {

std::string version_text() {
  using namespace lmsbi;
  return std::string("lmsbi ") + cli::kToolVersion + "\ntrajectory format LMTR v" + std::to_string(kTrajectoryVersion) +
         "\nflow checkpoint format LMNF v" + std::to_string(kFlowVersion) + "\nmanifest v" +
         std::to_string(cli::kManifestVersion);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Labour-market simulation and neural posterior inference", "lmsbi");
  app.set_version_flag("--version", version_text());
  app.config_formatter(std::make_shared<lmsbi::cli::JsonConfig>());
  app.set_config("--config", "", "JSON config or manifest to replay");
  app.require_subcommand(1);
  lmsbi::cli::register_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const lmsbi::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const lmsbi::ResourceError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return 5;
  } catch (const lmsbi::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
