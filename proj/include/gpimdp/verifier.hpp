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

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gpv {

/// Per-state bounds [lower, upper] on the probability of staying safe for `horizon` steps.
struct SafetyBounds {
  std::optional<std::size_t> horizon;  // nullopt: infinite horizon
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::size_t iterations_run = 0;
  bool converged = false;
  double last_change = 0.0;  // sup-norm of the final update of both vectors
  double tolerance = 1e-6;
};

using Distribution = std::vector<std::pair<std::size_t, double>>;

struct AdversaryChoice {
  Distribution distribution;  // nonzero entries only, ascending state index
  double value = 0.0;
};

/// Extreme feasible distribution of the row optimizing sum_q p(q) values(q):
/// every destination starts at its lower bound and the remaining mass goes to
/// destinations in descending (maximize) or ascending value order, each capped
/// at its interval width; equal values are taken in ascending state index.
/// Throws SoundnessError for a row with sum(lo) > 1 or sum(hi) < 1.
AdversaryChoice o_optimize(const Eigen::VectorXd& values, const ImdpRow& row, bool maximize);

/// One application of the pessimistic (min, min) and optimistic (max, max) operators.
std::pair<Eigen::VectorXd, Eigen::VectorXd> bellman_step(const Imdp& imdp, const Eigen::VectorXd& prev_lower,
                                                         const Eigen::VectorXd& prev_upper, unsigned threads = 1);

/// Starting vector: 1 on safe states, 0 on the unsafe state.
Eigen::VectorXd initial_values(const Imdp& imdp);

/// T Bellman steps from the initial vector. `converged` reports whether the last
/// update was below tol.
SafetyBounds verify_finite(const Imdp& imdp, std::size_t horizon, double tol = 1e-6, unsigned threads = 1);

/// Iterates until the sup-norm update of both vectors is below tol, or
/// max_iterations (converged = false, with a warning).
SafetyBounds verify_infinite(const Imdp& imdp, double tol = 1e-6, std::size_t max_iterations = 100000,
                             unsigned threads = 1);

/// CSV `state_index,p_min,p_max` preceded by `# key=value` lines (horizon,
/// tol, iterations, converged, then `extra` in order).
void write_safety_csv(std::ostream& out, const SafetyBounds& bounds,
                      const std::vector<std::pair<std::string, std::string>>& extra = {});
SafetyBounds read_safety_csv(std::istream& in);

}  // namespace gpv
