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

#pragma once

#include "gpimdp/box.hpp"
#include "gpimdp/error_bounds.hpp"
#include "gpimdp/gp.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace gpv {

/// Parsed experiment configuration. The file format is one `section.key = value`
/// per line; `#` starts a comment.
struct RunConfig {
  std::string system = "rotation";
  Box safe_box;
  double h = 0.25;

  std::size_t n_samples = 1000;
  double sigma = 0.01;
  std::uint64_t seed = 1;

  HyperGrid hyper;
  std::optional<double> lambda;           // default 1 + 2/n_D
  std::optional<SeKernelParams> kernel;   // fixed hyperparameters skip the search

  BoundsConfig bounds;
  int subgrid_k = 3;

  std::optional<std::size_t> horizon = 10;  // nullopt: infinite
  double tolerance = 1e-6;

  std::size_t mc_trials = 200;
  std::size_t mc_cells = 64;           // 0: every cell
  std::optional<std::size_t> mc_horizon;  // defaults to the verification horizon (100 when infinite)
  std::size_t mc_triples = 50;
  std::size_t mc_samples_x = 20;
  std::size_t mc_noise_draws = 1000;
  double mc_confidence = 0.99;
  std::uint64_t mc_seed = 7;

  std::filesystem::path output_dir = "out";
  unsigned threads = 0;

  std::optional<std::filesystem::path> input_dataset;
  std::optional<std::filesystem::path> input_models;
  std::optional<std::filesystem::path> input_imdp;
  std::optional<std::filesystem::path> input_results;

  /// key -> value exactly as written, for echoing into result metadata.
  std::map<std::string, std::string> raw;

  std::filesystem::path dataset_path() const;
  std::filesystem::path models_path() const;
  std::filesystem::path imdp_path() const;
  std::filesystem::path results_path() const;

  /// 64-bit FNV-1a over the canonical `key=value` listing, as hex.
  std::string hash() const;
};

/// Throws ConfigError naming every unknown or malformed key.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` override (same syntax as a config line).
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace gpv
