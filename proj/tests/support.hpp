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
#include "gpimdp/gp.hpp"

#include <Eigen/LU>

#include <random>

namespace gpv::testing {

// Posterior mean and variance by an explicit full-pivoting inverse of K + lambda I.
struct DenseOracle {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  SeKernelParams params;
  double lambda;
  Eigen::MatrixXd inverse;

  DenseOracle(Eigen::MatrixXd X_, Eigen::VectorXd Y_, SeKernelParams p, double lam)
      : X(std::move(X_)), Y(std::move(Y_)), params(p), lambda(lam) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        A(r, c) = params.signal_variance * std::exp(-(X.row(r) - X.row(c)).squaredNorm() /
                                                    (2.0 * params.lengthscale * params.lengthscale));
    A.diagonal().array() += lambda;
    inverse = A.fullPivLu().inverse();
  }

  Eigen::VectorXd kvec(const Eigen::VectorXd& x) const {
    Eigen::VectorXd k(X.rows());
    for (Eigen::Index j = 0; j < X.rows(); ++j)
      k[j] = params.signal_variance *
             std::exp(-(X.row(j).transpose() - x).squaredNorm() / (2.0 * params.lengthscale * params.lengthscale));
    return k;
  }
  double mean(const Eigen::VectorXd& x) const { return kvec(x).dot(inverse * Y); }
  double var(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd k = kvec(x);
    return params.signal_variance - k.dot(inverse * k);
  }
};

inline Eigen::MatrixXd uniform_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd X(n, dim);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) X(r, c) = u(rng);
  return X;
}

// Well-formed IMDP whose interval endpoints lie in {0, 1/4, 1/2, 3/4, 1}; the
// last state is the absorbing unsafe state and every row lists every destination.
inline Imdp random_quarter_imdp(std::mt19937_64& rng, std::size_t states, std::size_t actions) {
  std::vector<std::string> names;
  for (std::size_t a = 0; a < actions; ++a) names.push_back("a" + std::to_string(a));
  Imdp imdp(states, names, states - 1);
  std::uniform_int_distribution<int> quarter(0, 4);
  for (std::size_t q = 0; q < states; ++q)
    for (std::size_t a = 0; a < actions; ++a) {
      auto& row = imdp.row(q, a);
      if (q == states - 1) {
        row.entries = {{q, {1.0, 1.0}}};
        continue;
      }
      for (;;) {
        row.entries.clear();
        double slo = 0.0, shi = 0.0;
        for (std::size_t d = 0; d < states; ++d) {
          int i = quarter(rng), j = quarter(rng);
          if (i > j) std::swap(i, j);
          row.entries.push_back({d, {0.25 * i, 0.25 * j}});
          slo += 0.25 * i;
          shi += 0.25 * j;
        }
        if (slo <= 1.0 && shi >= 1.0) break;
      }
    }
  imdp.validate();
  return imdp;
}

// One safe state with self-loop [0.8, 0.9] and exit [0.1, 0.2] to the unsafe state.
inline Imdp chain_fixture() {
  Imdp imdp(2, {"a"}, 1);
  imdp.row(0, 0).entries = {{0, {0.8, 0.9}}, {1, {0.1, 0.2}}};
  imdp.row(1, 0).entries = {{1, {1.0, 1.0}}};
  imdp.validate();
  return imdp;
}

}  // namespace gpv::testing
