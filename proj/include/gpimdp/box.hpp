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

#include <Eigen/Core>

#include <optional>

namespace gpv {

/// Closed axis-aligned box [lo, hi] in R^n.
template <typename Scalar>
struct BoxT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector lo;
  Vector hi;

  BoxT() = default;
  BoxT(Vector lower, Vector upper) : lo(std::move(lower)), hi(std::move(upper)) {}

  Eigen::Index dim() const { return lo.size(); }
  bool empty() const { return lo.size() == 0 || (hi.array() < lo.array()).any(); }
  Vector center() const { return (lo + hi) / Scalar(2); }
  /// Per-axis half widths.
  Vector radii() const { return (hi - lo) / Scalar(2); }

  bool contains(const Vector& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  bool contains(const BoxT& other) const {
    return (other.lo.array() >= lo.array()).all() && (other.hi.array() <= hi.array()).all();
  }
  /// True if `other` lies in the open interior of this box.
  bool strictly_contains(const BoxT& other) const {
    return (other.lo.array() > lo.array()).all() && (other.hi.array() < hi.array()).all();
  }
  bool intersects(const BoxT& other) const {
    return (other.lo.array() <= hi.array()).all() && (lo.array() <= other.hi.array()).all();
  }
  bool operator==(const BoxT& other) const { return lo == other.lo && hi == other.hi; }
};

using Box = BoxT<double>;

/// Moves every face inward by eps; empty if any side is no longer than 2*eps.
template <typename Scalar>
std::optional<BoxT<Scalar>> shrink_box(const BoxT<Scalar>& box, Scalar eps) {
  if (eps == Scalar(0)) return box;
  if (((box.hi - box.lo).array() <= Scalar(2) * eps).any()) return std::nullopt;
  return BoxT<Scalar>(box.lo.array() + eps, box.hi.array() - eps);
}

template <typename Scalar>
BoxT<Scalar> expand_box(const BoxT<Scalar>& box, Scalar eps) {
  return BoxT<Scalar>(box.lo.array() - eps, box.hi.array() + eps);
}

/// Squared Euclidean distance from x to the nearest and farthest point of the box.
template <typename Scalar, typename Derived>
std::pair<Scalar, Scalar> squared_distance_range(const BoxT<Scalar>& box,
                                                 const Eigen::MatrixBase<Derived>& x) {
  Scalar near = 0, far = 0;
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    const Scalar xi = x[i];
    const Scalar below = box.lo[i] - xi;
    const Scalar above = xi - box.hi[i];
    const Scalar gap = below > 0 ? below : (above > 0 ? above : Scalar(0));
    near += gap * gap;
    const Scalar span = std::max(std::abs(xi - box.lo[i]), std::abs(xi - box.hi[i]));
    far += span * span;
  }
  return {near, far};
}

}  // namespace gpv
