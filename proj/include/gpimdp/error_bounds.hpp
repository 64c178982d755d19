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

#include "gpimdp/gp.hpp"
#include "gpimdp/grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace gpv {

enum class EpsilonMode {
  Explicit,            // epsilon taken from configuration
  DerivedLemma,        // beta_i * sup_q sigma_D
  DerivedPaperLiteral  // sqrt(beta_i) * sup_q sigma_D
};

std::string to_string(EpsilonMode mode);
/// Accepts explicit, derived_lemma, derived_paper_literal.
EpsilonMode parse_epsilon_mode(const std::string& s);

/// User-facing bound settings (config keys bounds.*).
struct BoundsConfig {
  double delta = 0.0;
  std::vector<double> B;  // per output dimension; empty selects the data-driven proxy
  EpsilonMode mode = EpsilonMode::DerivedLemma;
  double epsilon = 0.0;   // explicit mode only
};

/// Everything needed to instantiate the transition bounds.
struct BoundParams {
  std::vector<double> B;     // per dimension, as used (proxy values when B_is_proxy)
  bool B_is_proxy = false;
  double delta = 0.0;
  double sigma = 0.0;
  double lambda = 1.0;
  Eigen::MatrixXd alpha;     // information gain, rows = actions, cols = dimensions
  Eigen::MatrixXd beta;      // same layout
  double epsilon = 0.0;
  EpsilonMode mode = EpsilonMode::Explicit;
};

/// 1/2 log det(I + K / lambda), read off the stored factorization.
double information_gain(const GpModel& model);

/// (sigma / sqrt(lambda)) (B + sigma sqrt(2 (alpha + 1 + log(1/delta)))). Throws DomainError unless delta in (0,1).
double beta(double B, double sigma, double lambda, double alpha, double delta);

/// (1 - delta)^n.
double dimension_confidence(double delta, int n);

/// sqrt(Y^T (K + lambda I)^-1 Y): the RKHS norm of the posterior mean under the
/// regularized fit. Only a proxy for the true norm bound, not a certified value.
double rkhs_norm_proxy(const GpModel& model);

/// Fills B, alpha and beta. In derived modes delta must lie in (0,1); explicit mode
/// accepts delta in [0,1) and leaves beta computed only when delta > 0.
BoundParams resolve_bound_params(const ModelSet& models, const BoundsConfig& config, double sigma);

/// Explicit mode returns params.epsilon. Derived modes take the maximum over
/// actions, dimensions and cells of beta_i sup_q sigma_D (or sqrt(beta_i) sup_q sigma_D),
/// floored at 1e-12 with a warning. Throws StateError without models.
double epsilon_from_delta(const BoundParams& params, const ModelSet& models, const Grid& grid, int subgrid_k = 3,
                          unsigned threads = 1);

/// Same reduction over precomputed variance bounds: var_max[a * n + i][q].
double epsilon_from_variance_bounds(const BoundParams& params, const std::vector<std::vector<double>>& var_max,
                                    Eigen::Index dimension);

}  // namespace gpv
