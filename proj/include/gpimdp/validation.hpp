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
#include "gpimdp/dynamics.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>

namespace gpv {

struct McResult {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials, double confidence = 0.99);

McResult make_mc_result(std::size_t successes, std::size_t trials, double confidence = 0.99);

/// Chooses the next action from the observations y_0..y_k seen so far.
using Strategy = std::function<ActionId(std::span<const Eigen::VectorXd> observations, Rng& rng)>;

Strategy constant_strategy(ActionId a);
Strategy uniform_random_strategy(std::size_t num_actions);

/// Simulates x(k+1) = f(x(k), u(k)), y(k) = x(k) + v(k) and counts runs with
/// x(k) in safe_box for every k in [0, T]. Trial t draws from seed_seq{seed, t},
/// so results do not depend on scheduling.
McResult monte_carlo_safety(const SystemSpec& spec, const Box& safe_box, const Eigen::VectorXd& x0,
                            const Strategy& strategy, std::size_t horizon, double sigma, std::size_t trials,
                            std::uint64_t seed, double confidence = 0.99);

/// Exact min/max safety vectors by dynamic programming over every extreme
/// point of every row polytope (one per ordering of the destinations) and every
/// action. Limited to 5 states, 2 actions and T <= 5; throws SizeError beyond.
std::pair<Eigen::VectorXd, Eigen::VectorXd> enumerate_extreme_adversaries(const Imdp& imdp, std::size_t horizon);

/// Lowest and highest per-state estimate of Pr(f(x,a) + v in target) over sampled x in cell.
struct TransitionEnvelope {
  McResult min_estimate;
  McResult max_estimate;
};

TransitionEnvelope empirical_transition_check(const Box& cell, ActionId a, const Box& target, const SystemSpec& spec,
                                              double sigma, std::size_t samples_x, std::size_t noise_draws,
                                              std::uint64_t seed, double confidence = 0.99);

/// The interval is statistically consistent with the envelope when its lower
/// bound does not exceed the upper CI of the smallest estimate and its upper
/// bound is not below the lower CI of the largest estimate.
bool envelope_consistent(const TransitionInterval& interval, const TransitionEnvelope& envelope);

/// `successes,trials,point_estimate,ci_low,ci_high`.
void write_mc_row(std::ostream& out, const McResult& r);

}  // namespace gpv
