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

#include "gpimdp/grid.hpp"

#include "gpimdp/errors.hpp"

#include <cmath>

namespace gpv {

Grid::Grid(Box safe_box, double h) : safe_box_(std::move(safe_box)), h_(h) {
  if (!(h_ > 0) || !std::isfinite(h_)) throw ConfigError("grid.h must be positive and finite");
  if (safe_box_.dim() < 1) throw ConfigError("grid.safe_box has no axes");
  for (Eigen::Index i = 0; i < safe_box_.dim(); ++i) {
    const double side = safe_box_.hi[i] - safe_box_.lo[i];
    if (!(side > 0)) throw ConfigError("grid.safe_box axis " + std::to_string(i) + " is empty");
    const double ratio = side / h_;
    const double count = std::round(ratio);
    if (std::abs(ratio - count) > 1e-9 || count < 1)
      throw ConfigError("grid.safe_box axis " + std::to_string(i) + " has side " + std::to_string(side) +
                        ", not an integer multiple of h = " + std::to_string(h_));
    shape_.push_back(static_cast<std::size_t>(count));
    num_cells_ *= shape_.back();
  }
}

Box Grid::cell(std::size_t q) const {
  const auto idx = multi_index(q);
  Box b(safe_box_.lo, safe_box_.hi);
  for (Eigen::Index i = 0; i < dimension(); ++i) {
    const auto k = idx[static_cast<std::size_t>(i)];
    b.lo[i] = safe_box_.lo[i] + static_cast<double>(k) * h_;
    b.hi[i] = k + 1 == shape_[static_cast<std::size_t>(i)] ? safe_box_.hi[i]
                                                           : safe_box_.lo[i] + static_cast<double>(k + 1) * h_;
  }
  return b;
}

std::vector<std::size_t> Grid::multi_index(std::size_t q) const {
  if (q >= num_cells_) throw ConfigError("cell index " + std::to_string(q) + " out of range");
  std::vector<std::size_t> idx(shape_.size());
  for (std::size_t i = shape_.size(); i-- > 0;) {
    idx[i] = q % shape_[i];
    q /= shape_[i];
  }
  return idx;
}

std::size_t Grid::flat_index(const std::vector<std::size_t>& idx) const {
  std::size_t q = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) q = q * shape_[i] + idx[i];
  return q;
}

std::optional<std::size_t> Grid::locate(const Eigen::VectorXd& x) const {
  if (!safe_box_.contains(x)) return std::nullopt;
  std::vector<std::size_t> idx(shape_.size());
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    auto k = std::min(static_cast<std::size_t>(std::floor((x[e] - safe_box_.lo[e]) / h_)), shape_[i] - 1);
    // division rounding can land one cell off
    if (k > 0 && x[e] < safe_box_.lo[e] + static_cast<double>(k) * h_) --k;
    if (k + 1 < shape_[i] && x[e] >= safe_box_.lo[e] + static_cast<double>(k + 1) * h_) ++k;
    idx[i] = k;
  }
  return flat_index(idx);
}

Grid build_grid(const Box& safe_box, double h) { return Grid(safe_box, h); }

}  // namespace gpv
