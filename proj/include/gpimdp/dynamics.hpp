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

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace gpv {

using Rng = std::mt19937_64;
using ActionId = std::size_t;
using DynamicsMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Ground-truth dynamics x+ = f(x, a) of a benchmark system, one map per action.
class SystemSpec {
 public:
  SystemSpec(std::string name, Eigen::Index dimension);

  /// Appends a linear action x+ = A x.
  SystemSpec& add_linear(std::string action, const Eigen::MatrixXd& A);
  SystemSpec& add_map(std::string action, DynamicsMap map);

  const std::string& name() const { return name_; }
  Eigen::Index dimension() const { return dimension_; }
  std::size_t num_actions() const { return actions_.size(); }
  const std::vector<std::string>& action_names() const { return actions_; }
  /// Throws ConfigError for an unknown identifier.
  ActionId action_index(const std::string& action) const;

  Eigen::VectorXd step(const Eigen::VectorXd& x, ActionId a) const;

 private:
  std::string name_;
  Eigen::Index dimension_;
  std::vector<std::string> actions_;
  std::vector<DynamicsMap> maps_;
};

Eigen::Matrix2d rotation_matrix();
Eigen::Matrix2d upper_matrix();
Eigen::Matrix2d lower_matrix();

/// Built-in library: rotation, upper, lower, switched, nonlinear, or
/// `linear:[[a,b],[c,d]]` for a custom square matrix.
SystemSpec make_system(const std::string& selector);

/// f(x, a) without noise. Throws ConfigError for an unknown action.
Eigen::VectorXd step_true(const SystemSpec& spec, const Eigen::VectorXd& x, const std::string& action);
Eigen::VectorXd step_true(const SystemSpec& spec, const Eigen::VectorXd& x, ActionId action);

/// Observation noise: independent uniform[-sigma, sigma] components.
Eigen::VectorXd sample_noise(Rng& rng, double sigma, Eigen::Index n);

struct Sample {
  Eigen::VectorXd x;
  ActionId u = 0;
  Eigen::VectorXd y;
};

struct DataSet {
  std::string system;
  std::vector<std::string> action_names;
  Eigen::Index dimension = 0;
  double noise_bound = 0.0;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;

  /// Indices of the samples recorded under action a (the partition D_a).
  std::vector<std::size_t> partition(ActionId a) const;
  /// Training inputs of D_a as rows.
  Eigen::MatrixXd inputs(ActionId a) const;
  /// Component i of the observations in D_a.
  Eigen::VectorXd targets(ActionId a, Eigen::Index i) const;
};

/// n_samples i.i.d. states uniform over region, actions uniform over U, y = f(x,u) + v.
DataSet generate_dataset(const SystemSpec& spec, const Box& region, std::size_t n_samples,
                         double sigma, std::uint64_t seed);

/// CSV with `# key=value` metadata lines followed by header `x1,..,xn,u,y1,..,yn`.
void write_dataset_csv(std::ostream& out, const DataSet& data);
DataSet read_dataset_csv(std::istream& in);

}  // namespace gpv
