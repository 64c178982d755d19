/*
 * Copyright 2026 The gpimdp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gpimdp/errors.hpp"
#include "gpimdp/log.hpp"
#include "gpimdp/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"Safety verification of unknown systems via GP regression and interval MDP abstraction"};
  app.set_version_flag("--version", std::string("gpimdp ") + gpv::kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"generate", "sample a noisy dataset from the configured system"},
      {"fit", "fit one GP per action and state dimension"},
      {"abstract", "build the IMDP abstraction of the safe set"},
      {"verify", "run interval value iteration and export bounds"},
      {"mc-check", "audit the bounds against Monte Carlo simulation"},
      {"pipeline", "run every stage in order"},
  };
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "configuration file")->required();
    sub->add_option("-s,--set", overrides, "override a key, e.g. --set verify.horizon=inf");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto stage = gpv::parse_stage(app.get_subcommands().front()->get_name());
    auto config = gpv::load_config(config_path);
    for (const auto& o : overrides) gpv::apply_override(config, o);
    const auto report = gpv::run_stage(config, stage);
    for (const auto& a : report.artifacts) std::cout << a.string() << '\n';
    return 0;
  } catch (const gpv::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpv::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpv::StateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpv::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpv::SizeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gpv::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const gpv::SoundnessError& e) {
    std::cerr << "soundness error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
