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

#include "gpimdp/abstraction.hpp"
#include "gpimdp/dynamics.hpp"
#include "gpimdp/errors.hpp"
#include "gpimdp/grid.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace gpv;

namespace {
Box square(double lo, double hi) { return Box(Eigen::Vector2d(lo, lo), Eigen::Vector2d(hi, hi)); }
Box rect(double x0, double x1, double y0, double y1) { return Box(Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y1)); }

// Fitted models whose posterior mean is, up to training noise, the linear map A.
ModelSet linear_models(const std::string& system, std::size_t n, std::uint64_t seed) {
  const auto spec = make_system(system);
  const auto data = generate_dataset(spec, square(-4, 4), n, 0.01, seed);
  ModelSet set;
  set.action_names = data.action_names;
  set.dimension = 2;
  for (ActionId a = 0; a < data.action_names.size(); ++a)
    for (Eigen::Index i = 0; i < 2; ++i) set.models.push_back(fit(data, a, i, SeKernelParams{20, 10}, 1.0 + 2.0 / n));
  return set;
}
}  // namespace

TEST(Grid, Counts) {
  EXPECT_EQ(build_grid(square(-4, 4), 0.25).num_cells(), 1024u);
  EXPECT_EQ(build_grid(square(0, 1), 1.0).num_cells(), 1u);
  EXPECT_EQ(build_grid(square(-4, 4), 0.5).num_cells(), 256u);
  EXPECT_THROW(build_grid(square(0, 1), 0.3), ConfigError);
}

TEST(Grid, CellsTileTheBox) {
  const Grid g(rect(-1, 1, 0, 0.5), 0.25);
  EXPECT_EQ(g.num_cells(), 16u);
  EXPECT_EQ(g.unsafe_index(), 16u);
  for (std::size_t q = 0; q < g.num_cells(); ++q) {
    const Box c = g.cell(q);
    EXPECT_EQ(g.flat_index(g.multi_index(q)), q);
    EXPECT_EQ(g.locate(c.center()), q);
    EXPECT_NEAR((c.hi - c.lo).maxCoeff(), 0.25, 1e-15);
  }
  EXPECT_FALSE(g.locate(Eigen::Vector2d(2, 0.2)).has_value());
}

TEST(Boxes, ShrinkExpand) {
  EXPECT_FALSE(shrink_box(square(0, 1), 0.5).has_value());
  EXPECT_EQ(*shrink_box(square(0, 1), 0.1), square(0.1, 0.9));
  EXPECT_TRUE(expand_box(square(0, 1), 0.1).lo.isApprox(Eigen::Vector2d(-0.1, -0.1)));
  EXPECT_TRUE(expand_box(square(0, 1), 0.1).hi.isApprox(Eigen::Vector2d(1.1, 1.1)));
  EXPECT_EQ(*shrink_box(square(0, 1), 0.0), square(0, 1));
  EXPECT_EQ(expand_box(square(0, 1), 0.0), square(0, 1));
}

TEST(Transition, CertainCases) {
  const Box target = square(0, 1);
  const auto inside = transition_interval(square(0.4, 0.6), target, 0.1, 1.0);
  EXPECT_EQ(inside, (TransitionInterval{1.0, 1.0}));
  const auto far = transition_interval(square(3, 4), target, 0.1, 1.0);
  EXPECT_EQ(far, (TransitionInterval{0.0, 0.0}));
  const auto straddle = transition_interval(rect(0.8, 1.3, 0.4, 0.6), target, 0.1, 1.0);
  EXPECT_EQ(straddle, (TransitionInterval{0.0, 1.0}));
}

TEST(Transition, ConfidenceCases) {
  const double conf = dimension_confidence(0.1, 2);
  const auto p = transition_interval(square(0.4, 0.6), square(0, 1), 0.1, conf);
  EXPECT_NEAR(p.lo, 0.81, 1e-15);
  EXPECT_EQ(p.hi, 1.0);
  const auto q = transition_interval(square(0.4, 0.6), square(0, 1), 0.1, std::vector<double>{0.9, 0.9});
  EXPECT_NEAR(q.lo, 0.81, 1e-15);
  const auto far = transition_interval(square(3, 4), square(0, 1), 0.1, conf);
  EXPECT_EQ(far.lo, 0.0);
  EXPECT_NEAR(far.hi, 0.19, 1e-15);
}

TEST(Transition, UnsafeCases) {
  const Box safe = square(-4, 4);
  EXPECT_EQ(unsafe_transition_interval(square(0, 1), safe, 0.1, 1.0), (TransitionInterval{0.0, 0.0}));
  EXPECT_EQ(unsafe_transition_interval(square(10, 11), safe, 0.1, 1.0), (TransitionInterval{1.0, 1.0}));
  const auto p = unsafe_transition_interval(square(0, 1), safe, 0.1, 0.81);
  EXPECT_EQ(p.lo, 0.0);
  EXPECT_NEAR(p.hi, 0.19, 1e-15);
}

TEST(BuildImdp, SingleCellEverythingLeaves) {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 1, 0, 0, 1, 1, 1;
  const Eigen::VectorXd Y = Eigen::VectorXd::Constant(4, 50.0);
  ModelSet set;
  set.action_names = {"away"};
  set.dimension = 2;
  set.models = {fit(X, Y, SeKernelParams{1e4, 10}, 1e-6), fit(X, Y, SeKernelParams{1e4, 10}, 1e-6)};
  const Grid grid(square(0, 1), 1.0);
  AbstractionSettings s;
  s.epsilon = 0.1;
  const auto imdp = build_imdp(grid, set, s);
  EXPECT_EQ(imdp.interval(0, 0, 1), (TransitionInterval{1.0, 1.0}));
  EXPECT_EQ(imdp.interval(0, 0, 0), (TransitionInterval{0.0, 0.0}));
  EXPECT_EQ(imdp.interval(1, 0, 1), (TransitionInterval{1.0, 1.0}));
  EXPECT_EQ(imdp.interval(1, 0, 0), (TransitionInterval{0.0, 0.0}));
}

TEST(BuildImdp, RotationRowsWellFormed) {
  const auto set = linear_models("rotation", 400, 3);
  const Grid grid(square(-4, 4), 0.25);
  AbstractionSettings s;
  s.epsilon = 0.12;
  s.delta = 0.05;
  const auto imdp = build_imdp(grid, set, s);
  ASSERT_EQ(imdp.num_states(), 1025u);
  for (std::size_t q = 0; q < imdp.num_states(); ++q) {
    const auto [lo, hi] = row_sums(imdp.row(q, 0), imdp.num_states());
    EXPECT_LE(lo, 1.0 + 1e-9);
    EXPECT_GE(hi, 1.0 - 1e-9);
  }
  const auto& u = imdp.row(1024, 0);
  ASSERT_EQ(u.entries.size(), 1u);
  EXPECT_EQ(u.entries[0].dest, 1024u);
  EXPECT_EQ(u.entries[0].p, (TransitionInterval{1.0, 1.0}));
  EXPECT_EQ(u.fallback, (TransitionInterval{0.0, 0.0}));

  std::stringstream ss;
  export_imdp(ss, imdp);
  const auto back = import_imdp(ss);
  EXPECT_TRUE(back == imdp);
}

TEST(BuildImdp, ListsEveryCellTheImageCanReach) {
  const auto set = linear_models("rotation", 300, 4);
  const Grid grid(square(-4, 4), 0.5);
  AbstractionSettings s;
  s.epsilon = 0.1;
  const auto imdp = build_imdp(grid, set, s);
  for (std::size_t q = 0; q < grid.num_cells(); q += 7) {
    const Box image = mean_image_box(set, 0, grid.cell(q), s.subgrid_k);
    for (std::size_t d = 0; d < grid.num_cells(); ++d)
      EXPECT_EQ(imdp.interval(q, 0, d), transition_interval(image, grid.cell(d), 0.1, 1.0)) << q << "->" << d;
  }
}

TEST(Imdp, MissingHeaderIsParseError) {
  std::stringstream ss("states 2\n");
  EXPECT_THROW(import_imdp(ss), ParseError);
  std::stringstream missing("imdp 1\nstates 2\nunsafe 1\nactions 1 a\ndim 1\ndelta 0\ndefault 0 0\n");
  EXPECT_THROW(import_imdp(missing), ParseError);
}

TEST(Imdp, HandWrittenThreeStateFile) {
  std::stringstream ss(
      "imdp 1\n"
      "states 3\n"
      "unsafe 2\n"
      "actions 2 left right\n"
      "dim 1\n"
      "delta 0\n"
      "epsilon 0.1\n"
      "default 0 0\n"
      "# state 0\n"
      "0 0 0 0.5 0.7\n"
      "0 0 1 0.2 0.4\n"
      "0 0 2 0.1 0.1\n"
      "0 1 1 1 1\n"
      "1 0 0 0.25 1\n"
      "1 0 2 0 0.75\n"
      "1 1 1 0.6 0.9\n"
      "1 1 2 0.1 0.4\n"
      "2 0 2 1 1\n"
      "2 1 2 1 1\n");
  const auto imdp = import_imdp(ss);
  EXPECT_EQ(imdp.num_states(), 3u);
  EXPECT_EQ(imdp.action_names(), (std::vector<std::string>{"left", "right"}));
  EXPECT_EQ(imdp.interval(0, 0, 1), (TransitionInterval{0.2, 0.4}));
  EXPECT_EQ(imdp.interval(0, 1, 0), (TransitionInterval{0.0, 0.0}));
  EXPECT_EQ(imdp.interval(1, 0, 2), (TransitionInterval{0.0, 0.75}));
  EXPECT_EQ(imdp.interval(1, 1, 1), (TransitionInterval{0.6, 0.9}));
  EXPECT_EQ(imdp.epsilon, 0.1);
}

TEST(Imdp, ValidateRejectsBadRow) {
  Imdp imdp(2, {"a"}, 1);
  imdp.row(0, 0).entries = {{0, {0.1, 0.2}}, {1, {0.1, 0.2}}};
  imdp.row(1, 0).entries = {{1, {1, 1}}};
  EXPECT_THROW(imdp.validate(), SoundnessError);
  Imdp leaky(2, {"a"}, 1);
  leaky.row(0, 0).entries = {{1, {1, 1}}};
  leaky.row(1, 0).entries = {{0, {1, 1}}};
  EXPECT_THROW(leaky.validate(), SoundnessError);
}

TEST(Imdp, RestrictActions) {
  const auto set = linear_models("switched", 200, 5);
  const Grid grid(square(-4, 4), 1.0);
  AbstractionSettings s;
  s.epsilon = 0.1;
  const auto imdp = build_imdp(grid, set, s);
  const auto lower = restrict_actions(imdp, {1});
  ASSERT_EQ(lower.num_actions(), 1u);
  EXPECT_EQ(lower.action_names()[0], "lower");
  for (std::size_t q = 0; q < imdp.num_states(); ++q) EXPECT_EQ(lower.row(q, 0), imdp.row(q, 1));
}
