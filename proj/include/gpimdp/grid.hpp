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

#include <cstddef>
#include <optional>
#include <vector>

namespace gpv {

/// Uniform partition of an axis-aligned safe box into cubes of side h.
/// Cells are indexed row-major (axis 0 slowest); index num_cells() is the unsafe state.
class Grid {
 public:
  Grid(Box safe_box, double h);

  const Box& safe_box() const { return safe_box_; }
  double cell_side() const { return h_; }
  Eigen::Index dimension() const { return safe_box_.dim(); }
  std::size_t num_cells() const { return num_cells_; }
  std::size_t unsafe_index() const { return num_cells_; }
  /// Cells per axis.
  const std::vector<std::size_t>& shape() const { return shape_; }

  Box cell(std::size_t q) const;
  std::vector<std::size_t> multi_index(std::size_t q) const;
  std::size_t flat_index(const std::vector<std::size_t>& idx) const;
  /// The cell containing x (ties on shared faces go to the higher index), nullopt outside the safe box.
  std::optional<std::size_t> locate(const Eigen::VectorXd& x) const;

 private:
  Box safe_box_;
  double h_;
  std::vector<std::size_t> shape_;
  std::size_t num_cells_ = 1;
};

/// Checks that every side of safe_box is an integer multiple of h (tolerance 1e-9)
/// and throws ConfigError naming the offending axis otherwise.
Grid build_grid(const Box& safe_box, double h);

}  // namespace gpv
