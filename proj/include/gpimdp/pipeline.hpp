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

#include "gpimdp/abstraction.hpp"
#include "gpimdp/config.hpp"
#include "gpimdp/dynamics.hpp"
#include "gpimdp/gp.hpp"
#include "gpimdp/grid.hpp"
#include "gpimdp/verifier.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpv {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Stage { Generate, Fit, Abstract, Verify, McCheck, Pipeline };

Stage parse_stage(const std::string& name);
std::string to_string(Stage stage);

struct StageReport {
  std::vector<std::filesystem::path> artifacts;
  double wall_seconds = 0.0;
};

/// Runs one stage (or all of them, in order) reading and writing artifacts
/// under config.output_dir, and writes manifest.txt next to them.
StageReport run_stage(const RunConfig& config, Stage stage);

// In-memory building blocks of the stages.

DataSet generate_for(const RunConfig& config);
/// Hyperparameter search (unless fixed in config) and fit for every (action, dimension).
ModelSet fit_models(const DataSet& data, const RunConfig& config);

struct AbstractionResult {
  BoundParams bounds;
  Imdp imdp;
};
AbstractionResult abstract_models(const ModelSet& models, const RunConfig& config);

SafetyBounds verify_for(const Imdp& imdp, const RunConfig& config);

/// `# key=value` metadata echoed into result files: epsilon, delta, h, T, n_D, sigma, seed and every config key.
std::vector<std::pair<std::string, std::string>> result_metadata(const RunConfig& config, const Imdp& imdp);

/// Plot-ready CSV `x_lo,x_hi,y_lo,y_hi,p_min,p_max`, one row per cell and a
/// final unsafe-state row with empty geometry. Grids that are not 2-D get
/// `state_index,p_min,p_max` instead (and a notice).
void export_heatmap(std::ostream& out, const SafetyBounds& bounds, const Grid& grid);
/// Reads either heatmap layout back into lower/upper vectors.
SafetyBounds read_heatmap_csv(std::istream& in);

}  // namespace gpv
