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

#include "gpimdp/errors.hpp"
#include "gpimdp/validation.hpp"
#include "gpimdp/verifier.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace gpv;

TEST(OOptimize, PaperStyleExample) {
  ImdpRow row;
  row.entries = {{0, {0.2, 0.6}}, {1, {0.2, 0.6}}, {2, {0.2, 0.6}}};
  const Eigen::Vector3d v(1.0, 0.5, 0.0);
  const auto best = o_optimize(v, row, true);
  ASSERT_EQ(best.distribution.size(), 3u);
  EXPECT_NEAR(best.distribution[0].second, 0.6, 1e-15);
  EXPECT_NEAR(best.distribution[1].second, 0.2, 1e-15);
  EXPECT_NEAR(best.distribution[2].second, 0.2, 1e-15);
  EXPECT_NEAR(best.value, 0.7, 1e-15);
  const auto worst = o_optimize(v, row, false);
  EXPECT_NEAR(worst.value, 0.2 + 0.1, 1e-15);
}

TEST(OOptimize, DegenerateRow) {
  ImdpRow row;
  row.entries = {{0, {0.3, 0.3}}, {1, {0.7, 0.7}}};
  for (const Eigen::Vector2d v : {Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0)}) {
    const auto c = o_optimize(v, row, true);
    ASSERT_EQ(c.distribution.size(), 2u);
    EXPECT_EQ(c.distribution[0].second, 0.3);
    EXPECT_EQ(c.distribution[1].second, 0.7);
  }
}

TEST(OOptimize, FallbackMassGoesToBestUnlisted) {
  ImdpRow row;
  row.fallback = {0.0, 0.5};
  row.entries = {{0, {0.5, 0.5}}};
  const Eigen::Vector4d v(0.0, 0.2, 0.9, 0.4);
  EXPECT_NEAR(o_optimize(v, row, true).value, 0.45, 1e-15);
  EXPECT_NEAR(o_optimize(v, row, false).value, 0.1, 1e-15);
}

TEST(Bellman, AbsorbingUnsafe) {
  const auto imdp = gpv::testing::chain_fixture();
  const auto [lo, hi] = bellman_step(imdp, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0));
  EXPECT_EQ(lo[1], 0.0);
  EXPECT_EQ(hi[1], 0.0);
  EXPECT_NEAR(lo[0], 0.8, 1e-15);
  EXPECT_NEAR(hi[0], 0.9, 1e-15);
}

TEST(Bellman, PreservesOrdering) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    const auto imdp = gpv::testing::random_quarter_imdp(rng, 4, 2);
    Eigen::VectorXd a(4), b(4);
    for (int i = 0; i < 4; ++i) {
      a[i] = u(rng);
      b[i] = a[i] + u(rng) * (1 - a[i]);
    }
    a[3] = b[3] = 0;
    const auto [lo, hi] = bellman_step(imdp, a, b);
    for (int i = 0; i < 4; ++i) EXPECT_LE(lo[i], hi[i] + 1e-15);
  }
}

TEST(Finite, ZeroHorizon) {
  const auto imdp = gpv::testing::chain_fixture();
  const auto r = verify_finite(imdp, 0);
  EXPECT_EQ(r.lower, Eigen::Vector2d(1, 0));
  EXPECT_EQ(r.upper, Eigen::Vector2d(1, 0));
}

TEST(Finite, HandSolvedChain) {
  const auto r = verify_finite(gpv::testing::chain_fixture(), 2);
  EXPECT_NEAR(r.lower[0], 0.64, 1e-15);
  EXPECT_NEAR(r.upper[0], 0.81, 1e-15);
  EXPECT_EQ(r.lower[1], 0.0);
}

TEST(Finite, MatchesEnumerationOnThreeStates) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto imdp = gpv::testing::random_quarter_imdp(rng, 3, 2);
    const auto r = verify_finite(imdp, 3);
    const auto [lo, hi] = enumerate_extreme_adversaries(imdp, 3);
    EXPECT_TRUE(r.lower.isApprox(lo, 1e-12) || (r.lower - lo).cwiseAbs().maxCoeff() < 1e-12);
    EXPECT_TRUE((r.upper - hi).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST(Infinite, AllToUnsafe) {
  Imdp imdp(3, {"a"}, 2);
  imdp.row(0, 0).entries = {{2, {1, 1}}};
  imdp.row(1, 0).entries = {{2, {1, 1}}};
  imdp.row(2, 0).entries = {{2, {1, 1}}};
  imdp.validate();
  const auto r = verify_infinite(imdp, 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.lower, Eigen::Vector3d::Zero());
  EXPECT_EQ(r.upper, Eigen::Vector3d::Zero());
}

TEST(Infinite, InvariantSelfLoop) {
  Imdp imdp(2, {"a"}, 1);
  imdp.row(0, 0).entries = {{0, {1, 1}}};
  imdp.row(1, 0).entries = {{1, {1, 1}}};
  imdp.validate();
  const auto r = verify_infinite(imdp);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.lower[0], 1.0);
  EXPECT_EQ(r.upper[0], 1.0);
}

TEST(Infinite, GeometricDecay) {
  Imdp imdp(2, {"a"}, 1);
  imdp.row(0, 0).entries = {{0, {0.9, 0.9}}, {1, {0.1, 0.1}}};
  imdp.row(1, 0).entries = {{1, {1, 1}}};
  imdp.validate();
  const double tol = 1e-6;
  const auto r = verify_infinite(imdp, tol);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.upper[0], 10 * tol);
  EXPECT_NEAR(r.lower[0], std::pow(0.9, static_cast<double>(r.iterations_run)), 1e-12);
}

TEST(Infinite, ReportsNonConvergence) {
  Imdp imdp(2, {"a"}, 1);
  imdp.row(0, 0).entries = {{0, {0.9, 0.9}}, {1, {0.1, 0.1}}};
  imdp.row(1, 0).entries = {{1, {1, 1}}};
  imdp.validate();
  const auto r = verify_infinite(imdp, 1e-9, 5);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations_run, 5u);
}

TEST(Results, CsvRoundTrip) {
  std::mt19937_64 rng(2);
  const auto r = verify_finite(gpv::testing::random_quarter_imdp(rng, 4, 2), 3);
  std::stringstream ss;
  write_safety_csv(ss, r, {{"epsilon", "0.12"}});
  EXPECT_NE(ss.str().find("# epsilon=0.12"), std::string::npos);
  const auto back = read_safety_csv(ss);
  EXPECT_EQ(back.lower, r.lower);
  EXPECT_EQ(back.upper, r.upper);
  EXPECT_EQ(back.horizon, r.horizon);
}
