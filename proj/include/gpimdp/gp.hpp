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

// Gaussian-process regression with a squared-exponential kernel, one scalar
// output per model. Everything numeric is templated on the scalar type and
// written as free functions over Eigen expressions; the double instantiation
// is the one the rest of the toolkit uses.

#include "gpimdp/box.hpp"
#include "gpimdp/dynamics.hpp"
#include "gpimdp/errors.hpp"
#include "gpimdp/log.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace gpv {

template <typename Scalar>
struct SeKernelParamsT {
  Scalar signal_variance = 1;  // sigma_f^2
  Scalar lengthscale = 1;      // isotropic

  bool valid() const {
    return std::isfinite(signal_variance) && std::isfinite(lengthscale) && signal_variance > 0 &&
           lengthscale > 0;
  }
};

template <typename Scalar>
struct IntervalT {
  Scalar lo = 0;
  Scalar hi = 0;

  Scalar width() const { return hi - lo; }
  bool contains(Scalar v) const { return lo <= v && v <= hi; }
  bool contains(const IntervalT& other) const { return lo <= other.lo && other.hi <= hi; }
};

/// A fitted regressor for output dimension `output_dim` under action `action`.
/// Immutable after fit; all queries are const and thread-safe.
template <typename Scalar>
struct GpModelT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::size_t action = 0;
  Eigen::Index output_dim = 0;
  SeKernelParamsT<Scalar> kernel;
  Scalar lambda = 1;
  Scalar jitter = 0;   // extra diagonal added during factorization, 0 when none was needed
  Matrix inputs;       // training inputs as rows, |X| x n
  Vector targets;      // Y
  Vector weights;      // (K + lambda I)^-1 Y
  Matrix solve_factor; // lower Cholesky factor of K + (lambda + jitter) I

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
};

using SeKernelParams = SeKernelParamsT<double>;
using Interval = IntervalT<double>;
using GpModel = GpModelT<double>;

template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar kernel_eval(const SeKernelParamsT<Scalar>& params, const Eigen::MatrixBase<DerivedA>& x,
                   const Eigen::MatrixBase<DerivedB>& x2) {
  const Scalar sq = (x - x2).squaredNorm();
  return params.signal_variance * std::exp(-sq / (Scalar(2) * params.lengthscale * params.lengthscale));
}

/// K(X, X) for training inputs stored as rows.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kernel_matrix(
    const SeKernelParamsT<Scalar>& params, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X) {
  const Eigen::Index n = X.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> K(n, n);
  const Scalar scale = Scalar(-1) / (Scalar(2) * params.lengthscale * params.lengthscale);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = params.signal_variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Scalar v = params.signal_variance * std::exp(scale * (X.row(i) - X.row(j)).squaredNorm());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

/// K(x, X) as a column vector.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> kernel_vector(const GpModelT<Scalar>& model,
                                                       const Eigen::MatrixBase<Derived>& x) {
  const Scalar scale = Scalar(-1) / (Scalar(2) * model.kernel.lengthscale * model.kernel.lengthscale);
  return (model.inputs.rowwise() - x.transpose()).rowwise().squaredNorm().array().unaryExpr(
             [scale](Scalar d2) { return std::exp(scale * d2); }) *
         model.kernel.signal_variance;
}

namespace detail {

template <typename Scalar>
std::string condition_report(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> eig(
      A, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const Scalar lo = ev.minCoeff(), hi = ev.maxCoeff();
  return "eigenvalues in [" + std::to_string(static_cast<double>(lo)) + ", " +
         std::to_string(static_cast<double>(hi)) + "], condition estimate " +
         (lo > 0 ? std::to_string(static_cast<double>(hi / lo)) : std::string("inf"));
}

}  // namespace detail

/// Factorizes K(X,X) + lambda I once and precomputes the weights. On failure
/// retries with jitter 1e-10, 1e-9, 1e-8 on the diagonal, then throws NumericError.
template <typename Scalar>
GpModelT<Scalar> fit(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& Y, const SeKernelParamsT<Scalar>& params,
                     Scalar lambda, std::size_t action = 0, Eigen::Index output_dim = 0) {
  if (X.rows() == 0) throw ConfigError("cannot fit a GP on an empty training set");
  if (X.rows() != Y.size()) throw ConfigError("training inputs and targets differ in length");
  if (!params.valid()) throw ConfigError("kernel parameters must be positive and finite");
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");

  GpModelT<Scalar> model;
  model.action = action;
  model.output_dim = output_dim;
  model.kernel = params;
  model.lambda = lambda;
  model.inputs = X;
  model.targets = Y;

  using Matrix = typename GpModelT<Scalar>::Matrix;
  Matrix A = kernel_matrix(params, X);
  A.diagonal().array() += lambda;
  Scalar jitter = 0;
  for (int attempt = 0;; ++attempt) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) {
      model.solve_factor = llt.matrixL();
      model.weights = llt.solve(Y);
      break;
    }
    if (attempt == 3)
      throw NumericError("kernel matrix is not positive definite after jitter " +
                         std::to_string(static_cast<double>(jitter)) + ": " + detail::condition_report<Scalar>(A));
    const Scalar next = attempt == 0 ? Scalar(1e-10) : jitter * Scalar(10);
    A.diagonal().array() += next - jitter;
    jitter = next;
  }
  if (jitter > 0)
    log_warning("GP factorization needed diagonal jitter " + std::to_string(static_cast<double>(jitter)));
  model.jitter = jitter;
  return model;
}

template <typename Scalar, typename Derived>
Scalar posterior_mean(const GpModelT<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  return kernel_vector(model, x).dot(model.weights);
}

/// Gradient of the posterior mean with respect to x.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> posterior_mean_gradient(const GpModelT<Scalar>& model,
                                                                 const Eigen::MatrixBase<Derived>& x) {
  const auto k = kernel_vector(model, x);
  const Scalar inv_l2 = Scalar(1) / (model.kernel.lengthscale * model.kernel.lengthscale);
  // d/dx k(x, x_j) = -k(x, x_j) (x - x_j) / l^2
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coeff = k.cwiseProduct(model.weights);
  return inv_l2 * (model.inputs.transpose() * coeff - coeff.sum() * x);
}

/// Posterior variance, clamped at zero. Raw values below -1e-10 are reported.
template <typename Scalar, typename Derived>
Scalar posterior_var(const GpModelT<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  const auto k = kernel_vector(model, x);
  const typename GpModelT<Scalar>::Vector v = model.solve_factor.template triangularView<Eigen::Lower>().solve(k);
  const Scalar raw = model.kernel.signal_variance - v.squaredNorm();
  if (raw < Scalar(-1e-10))
    log_warning("posterior variance clamped from " + std::to_string(static_cast<double>(raw)) + " to 0");
  return std::max(raw, Scalar(0));
}

/// Global Lipschitz constant of the posterior mean: sigma_f^2 e^{-1/2} / l * sum |w_j|.
template <typename Scalar>
Scalar mean_lipschitz_bound(const GpModelT<Scalar>& model) {
  const Scalar kernel_lipschitz =
      model.kernel.signal_variance * std::exp(Scalar(-0.5)) / model.kernel.lengthscale;
  return kernel_lipschitz * model.weights.template lpNorm<1>();
}

namespace detail {

// sup of e^{-t/2} max(1, |t-1|) over t in [tmin, tmax]; the spectral norm of the
// squared-exponential Hessian is sigma_f^2 / l^2 times this at t = |x - x_j|^2 / l^2.
// The function decreases on [0,2], increases on [2,3] and decreases after 3.
template <typename Scalar>
Scalar hessian_profile_sup(Scalar tmin, Scalar tmax) {
  auto h = [](Scalar t) { return std::exp(-t / 2) * std::max(Scalar(1), std::abs(t - 1)); };
  return std::max(h(tmin), h(std::clamp(Scalar(3), tmin, tmax)));
}

// sup of u e^{-u^2/2} over u in [umin, umax]; peaks at u = 1.
template <typename Scalar>
Scalar gradient_profile_sup(Scalar umin, Scalar umax) {
  const Scalar u = std::clamp(Scalar(1), umin, umax);
  return u * std::exp(-u * u / 2);
}

/// Calls fn(sub_box) for each of the d^n congruent sub-boxes of box.
template <typename Scalar, typename Fn>
void for_each_subbox(const BoxT<Scalar>& box, int d, Fn&& fn) {
  const Eigen::Index n = box.dim();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const auto step = ((box.hi - box.lo) / Scalar(d)).eval();
  BoxT<Scalar> sub(box.lo, box.hi);
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) {
      sub.lo[i] = box.lo[i] + step[i] * idx[static_cast<std::size_t>(i)];
      sub.hi[i] = idx[static_cast<std::size_t>(i)] + 1 == d ? box.hi[i] : sub.lo[i] + step[i];
    }
    fn(sub);
    Eigen::Index i = 0;
    for (; i < n; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < d) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i == n) break;
  }
}

inline std::vector<int> divisors(int k) {
  std::vector<int> out;
  for (int d = 1; d <= k; ++d)
    if (k % d == 0) out.push_back(d);
  return out;
}

/// Enclosure of the posterior mean over one box: the smaller of the global
/// Lipschitz interval and a second-order Taylor interval around the center,
/// whose remainder uses a Hessian norm bound local to the box.
template <typename Scalar>
IntervalT<Scalar> mean_enclosure(const GpModelT<Scalar>& model, const BoxT<Scalar>& box, Scalar global_lipschitz) {
  const Eigen::Index n = box.dim();
  const auto c = box.center();
  const auto r = box.radii();
  const Scalar l2 = model.kernel.lengthscale * model.kernel.lengthscale;
  const Scalar sf2 = model.kernel.signal_variance;

  Scalar mean = 0, hess = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  for (Eigen::Index j = 0; j < model.size(); ++j) {
    const auto xj = model.inputs.row(j).transpose();
    const Scalar w = model.weights[j];
    const Scalar kc = sf2 * std::exp(-(c - xj).squaredNorm() / (2 * l2));
    mean += w * kc;
    grad.noalias() -= (w * kc / l2) * (c - xj);
    const auto [near, far] = squared_distance_range(box, xj);
    hess += std::abs(w) * hessian_profile_sup(near / l2, far / l2);
  }
  hess *= sf2 / l2;
  const Scalar taylor = grad.cwiseAbs().dot(r) + Scalar(0.5) * hess * r.squaredNorm();
  const Scalar lipschitz = global_lipschitz * r.norm();
  const Scalar half = std::min(taylor, lipschitz);
  return {mean - half, mean + half};
}

}  // namespace detail

/// Interval guaranteed to contain {mu(x) : x in box}. The box is split into
/// d^n sub-boxes for every divisor d of k; each level yields the hull of its
/// sub-box enclosures and the levels are intersected, so refining k to a
/// multiple never widens the result.
template <typename Scalar>
IntervalT<Scalar> mean_range_over_box(const GpModelT<Scalar>& model, const BoxT<Scalar>& box, int k = 3) {
  if (k < 1) throw ConfigError("sub-grid refinement k must be at least 1");
  if (box.empty()) throw ConfigError("mean range requested over an empty box");
  const Scalar lip = mean_lipschitz_bound(model);
  IntervalT<Scalar> result{-std::numeric_limits<Scalar>::infinity(), std::numeric_limits<Scalar>::infinity()};
  for (int d : detail::divisors(k)) {
    IntervalT<Scalar> hull{std::numeric_limits<Scalar>::infinity(), -std::numeric_limits<Scalar>::infinity()};
    detail::for_each_subbox(box, d, [&](const BoxT<Scalar>& sub) {
      const auto e = detail::mean_enclosure(model, sub, lip);
      hull.lo = std::min(hull.lo, e.lo);
      hull.hi = std::max(hull.hi, e.hi);
    });
    result.lo = std::max(result.lo, hull.lo);
    result.hi = std::min(result.hi, hull.hi);
  }
  return result;
}

/// Upper bound on the posterior variance over a box. Per sub-box with center c,
/// sigma^2(x) = sigma_f^2 - |L^-1 k(x)|^2 and |L^-1 (k(x) - k(c))| <= rho with
/// rho = |x - c| / sqrt(lambda) * sqrt(sum_j G_j^2), G_j the local gradient bound of k(., x_j).
/// Levels over the divisors of k are intersected as in mean_range_over_box.
template <typename Scalar>
Scalar var_max_over_box(const GpModelT<Scalar>& model, const BoxT<Scalar>& box, int k = 3) {
  if (k < 1) throw ConfigError("sub-grid refinement k must be at least 1");
  if (box.empty()) throw ConfigError("variance bound requested over an empty box");
  using Matrix = typename GpModelT<Scalar>::Matrix;
  const Scalar sf2 = model.kernel.signal_variance;
  const Scalar ell = model.kernel.lengthscale;
  const Scalar inv_sqrt_lambda = Scalar(1) / std::sqrt(model.lambda + model.jitter);

  std::vector<BoxT<Scalar>> subs;
  std::vector<int> level_end;
  const auto levels = detail::divisors(k);
  for (int d : levels) {
    detail::for_each_subbox(box, d, [&](const BoxT<Scalar>& sub) { subs.push_back(sub); });
    level_end.push_back(static_cast<int>(subs.size()));
  }
  const auto m = static_cast<Eigen::Index>(subs.size());
  Matrix kc(model.size(), m);
  std::vector<Scalar> rho(static_cast<std::size_t>(m));
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& sub = subs[static_cast<std::size_t>(s)];
    const auto c = sub.center();
    kc.col(s) = kernel_vector(model, c);
    Scalar g2 = 0;
    for (Eigen::Index j = 0; j < model.size(); ++j) {
      const auto [near, far] = squared_distance_range(sub, model.inputs.row(j).transpose());
      const Scalar g = sf2 / ell * detail::gradient_profile_sup(std::sqrt(near) / ell, std::sqrt(far) / ell);
      g2 += g * g;
    }
    rho[static_cast<std::size_t>(s)] = sub.radii().norm() * inv_sqrt_lambda * std::sqrt(g2);
  }
  model.solve_factor.template triangularView<Eigen::Lower>().solveInPlace(kc);

  Scalar result = sf2;
  int begin = 0;
  for (int end : level_end) {
    Scalar level_max = 0;
    for (int s = begin; s < end; ++s) {
      const Scalar reach = std::max(Scalar(0), kc.col(s).norm() - rho[static_cast<std::size_t>(s)]);
      level_max = std::max(level_max, std::clamp(sf2 - reach * reach, Scalar(0), sf2));
    }
    result = std::min(result, level_max);
    begin = end;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Hyperparameters, model sets, serialization (double only).

/// -1/2 Y^T (K + lambda I)^-1 Y - 1/2 log det(K + lambda I) - n/2 log 2 pi.
/// Returns -inf when the matrix cannot be factorized.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const SeKernelParams& params,
                               double lambda);

/// Log-spaced search box for (sigma_f^2, lengthscale). The search evaluates a
/// coarse lattice first, then every fine lattice point within one coarse step
/// of the coarse optimum.
struct HyperGrid {
  double signal_variance_min = 1e-2;
  double signal_variance_max = 1e2;
  double lengthscale_min = 1e-1;
  double lengthscale_max = 1e1;
  int points_per_decade = 10;
  int coarse_points_per_decade = 2;
  /// Likelihood evaluations use an evenly strided subset of at most this many points (0 = all).
  std::size_t max_points = 300;
};

struct HyperCandidate {
  SeKernelParams params;
  double log_likelihood = 0;
};

struct HyperSearchResult {
  SeKernelParams best;
  std::vector<HyperCandidate> evaluated;
};

/// Evaluates every candidate; returns the first one attaining the maximum likelihood.
HyperSearchResult search_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                                         const std::vector<SeKernelParams>& candidates);

/// Grid search. Requires at least 10 points. Constant targets return the
/// smallest grid signal variance (with the largest lengthscale) and a warning.
HyperSearchResult optimize_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                                           const HyperGrid& grid = {});

/// Fits the model for output dimension i of action a from D_a.
GpModel fit(const DataSet& data, ActionId a, Eigen::Index i, const SeKernelParams& params, double lambda);
HyperSearchResult optimize_hyperparameters(const DataSet& data, ActionId a, Eigen::Index i, double lambda,
                                           const HyperGrid& grid = {});

/// lambda = 1 + 2 / n_D.
inline double default_lambda(std::size_t n_samples) { return 1.0 + 2.0 / static_cast<double>(n_samples); }

/// All fitted models of one abstraction, indexed by (action, output dimension).
struct ModelSet {
  std::vector<std::string> action_names;
  Eigen::Index dimension = 0;
  std::vector<GpModel> models;  // models[a * dimension + i]

  std::size_t num_actions() const { return action_names.size(); }
  const GpModel& at(std::size_t a, Eigen::Index i) const {
    return models.at(a * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(i));
  }
  bool empty() const { return models.empty(); }
};

/// Text dump, 17 significant digits, exact round trip. Format:
///   gpimdp-models 1
///   actions <name>...
///   dimension <n>
///   models <count>
///   then per model: `model <a> <i> <N>`, `kernel <sigma_f^2> <l>`, `lambda <v> <jitter>`,
///   N lines `x_1..x_n y w`, then N lines of the factor's lower triangle (row r has r+1 values).
void write_models(std::ostream& out, const ModelSet& set);
ModelSet read_models(std::istream& in);

}  // namespace gpv
