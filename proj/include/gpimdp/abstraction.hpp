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

#include "gpimdp/error_bounds.hpp"
#include "gpimdp/gp.hpp"
#include "gpimdp/grid.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpv {

struct TransitionInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return 0.0 <= lo && lo <= hi && hi <= 1.0; }
  bool operator==(const TransitionInterval&) const = default;
};

struct TransitionEntry {
  std::size_t dest = 0;
  TransitionInterval p;

  bool operator==(const TransitionEntry&) const = default;
};

/// Outgoing intervals of one (state, action) pair. Destinations not listed in
/// `entries` (sorted by dest, unique) take the interval `fallback`.
struct ImdpRow {
  std::vector<TransitionEntry> entries;
  TransitionInterval fallback;

  TransitionInterval interval(std::size_t dest) const;
  bool operator==(const ImdpRow&) const = default;
};

/// Interval MDP over states 0..num_states-1 where `unsafe` is the absorbing
/// unsafe state. Every action is enabled in every state.
class Imdp {
 public:
  Imdp(std::size_t num_states, std::vector<std::string> action_names, std::size_t unsafe);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return action_names_.size(); }
  std::size_t unsafe_state() const { return unsafe_; }
  const std::vector<std::string>& action_names() const { return action_names_; }

  const ImdpRow& row(std::size_t q, std::size_t a) const { return rows_.at(q * num_actions() + a); }
  ImdpRow& row(std::size_t q, std::size_t a) { return rows_.at(q * num_actions() + a); }
  TransitionInterval interval(std::size_t q, std::size_t a, std::size_t dest) const { return row(q, a).interval(dest); }

  /// Sorts entries, then checks interval validity and sum(lo) <= 1 <= sum(hi) on
  /// every row and that the unsafe state is absorbing. Throws SoundnessError
  /// naming the offending row.
  void validate(double tol = 1e-9);

  // Metadata carried through export/import.
  Eigen::Index dimension = 0;
  double delta = 0.0;
  double epsilon = 0.0;

  bool operator==(const Imdp&) const = default;

 private:
  std::size_t num_states_;
  std::vector<std::string> action_names_;
  std::size_t unsafe_;
  std::vector<ImdpRow> rows_;
};

/// Sums of lower and upper bounds of a row over num_states destinations.
std::pair<double, double> row_sums(const ImdpRow& row, std::size_t num_states);

/// Over-approximation M of the mean image mu_D^a(cell): product of per-dimension mean ranges.
Box mean_image_box(const ModelSet& models, std::size_t action, const Box& cell, int subgrid_k = 3);

/// Interval for reaching `target` from a cell whose mean image lies in `image`.
/// Lower is `confidence` when image sits strictly inside target shrunk by eps,
/// else 0. Upper is 1 when image meets target enlarged by eps, else 1 - confidence.
TransitionInterval transition_interval(const Box& image, const Box& target, double eps, double confidence);

/// Per-dimension confidences (1 - delta_i); their product scales the bounds.
TransitionInterval transition_interval(const Box& image, const Box& target, double eps,
                                       const std::vector<double>& dimension_confidences);

/// Interval for leaving the safe box: one minus the interval for staying in it, reversed.
TransitionInterval unsafe_transition_interval(const Box& image, const Box& safe_box, double eps, double confidence);

struct AbstractionSettings {
  double epsilon = 0.12;
  double delta = 0.0;
  int subgrid_k = 3;
  unsigned threads = 1;
};

/// Builds the IMDP over grid cells plus the absorbing unsafe state and validates it.
Imdp build_imdp(const Grid& grid, const ModelSet& models, const AbstractionSettings& settings);

/// Copy of the IMDP keeping only the listed actions (in the given order).
Imdp restrict_actions(const Imdp& imdp, const std::vector<std::size_t>& actions);

/// Text format:
///   imdp 1
///   states <m+1>
///   unsafe <index>
///   actions <count> <name>...
///   dim <n>
///   delta <v>
///   epsilon <v>
///   default <lo> <hi>
///   rowdefault <q> <a> <lo> <hi>     (rows whose fallback differs from default)
///   <q> <a> <q'> <lo> <hi>           (one line per listed entry)
/// Numbers use 17 significant digits so import(export(x)) == x.
void export_imdp(std::ostream& out, const Imdp& imdp);
Imdp import_imdp(std::istream& in);

}  // namespace gpv
