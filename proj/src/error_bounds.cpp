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

#include "gpimdp/error_bounds.hpp"

#include "gpimdp/errors.hpp"
#include "gpimdp/log.hpp"
#include "gpimdp/parallel.hpp"

#include <cmath>

namespace gpv {

std::string to_string(EpsilonMode mode) {
  switch (mode) {
    case EpsilonMode::Explicit: return "explicit";
    case EpsilonMode::DerivedLemma: return "derived_lemma";
    case EpsilonMode::DerivedPaperLiteral: return "derived_paper_literal";
  }
  return "unknown";
}

EpsilonMode parse_epsilon_mode(const std::string& s) {
  if (s == "explicit") return EpsilonMode::Explicit;
  if (s == "derived_lemma") return EpsilonMode::DerivedLemma;
  if (s == "derived_paper_literal") return EpsilonMode::DerivedPaperLiteral;
  throw ConfigError("bounds.epsilon_mode must be explicit, derived_lemma or derived_paper_literal, got '" + s + "'");
}

double information_gain(const GpModel& model) {
  if (model.size() == 0) return 0.0;
  const double reg = model.lambda + model.jitter;
  const double log_det = 2.0 * model.solve_factor.diagonal().array().log().sum();
  return std::max(0.0, 0.5 * (log_det - static_cast<double>(model.size()) * std::log(reg)));
}

double beta(double B, double sigma, double lambda, double alpha, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1), got " + std::to_string(delta));
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (B < 0 || sigma < 0 || alpha < 0) throw DomainError("B, sigma and alpha must be nonnegative");
  return sigma / std::sqrt(lambda) * (B + sigma * std::sqrt(2.0 * (alpha + 1.0 + std::log(1.0 / delta))));
}

double dimension_confidence(double delta, int n) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0,1)");
  if (n < 1) throw DomainError("dimension must be at least 1");
  return std::pow(1.0 - delta, n);
}

double rkhs_norm_proxy(const GpModel& model) {
  return std::sqrt(std::max(0.0, model.targets.dot(model.weights)));
}

BoundParams resolve_bound_params(const ModelSet& models, const BoundsConfig& config, double sigma) {
  if (models.empty()) throw StateError("bound parameters need fitted models");
  const bool derived = config.mode != EpsilonMode::Explicit;
  if (derived && !(config.delta > 0.0 && config.delta < 1.0))
    throw ConfigError("bounds.delta must lie in (0,1) for derived epsilon modes");
  if (!derived && !(config.delta >= 0.0 && config.delta < 1.0))
    throw ConfigError("bounds.delta must lie in [0,1)");
  if (!derived && !(config.epsilon > 0.0)) throw ConfigError("bounds.epsilon must be positive in explicit mode");
  if (!config.B.empty() && static_cast<Eigen::Index>(config.B.size()) != models.dimension)
    throw ConfigError("bounds.B needs one entry per state dimension");

  BoundParams p;
  p.delta = config.delta;
  p.sigma = sigma;
  p.mode = config.mode;
  p.epsilon = derived ? 0.0 : config.epsilon;
  p.lambda = models.models.front().lambda;
  const auto na = static_cast<Eigen::Index>(models.num_actions());
  p.alpha = Eigen::MatrixXd::Zero(na, models.dimension);
  p.beta = Eigen::MatrixXd::Zero(na, models.dimension);
  p.B_is_proxy = config.B.empty();
  p.B.assign(static_cast<std::size_t>(models.dimension), 0.0);
  for (Eigen::Index i = 0; i < models.dimension; ++i) {
    if (!p.B_is_proxy) {
      p.B[static_cast<std::size_t>(i)] = config.B[static_cast<std::size_t>(i)];
      continue;
    }
    for (Eigen::Index a = 0; a < na; ++a)
      p.B[static_cast<std::size_t>(i)] =
          std::max(p.B[static_cast<std::size_t>(i)], rkhs_norm_proxy(models.at(static_cast<std::size_t>(a), i)));
  }
  if (p.B_is_proxy && derived)
    log_warning("bounds.B not set: using the data-driven RKHS norm proxy, which is not a certified bound");
  for (Eigen::Index a = 0; a < na; ++a)
    for (Eigen::Index i = 0; i < models.dimension; ++i) {
      const auto& m = models.at(static_cast<std::size_t>(a), i);
      p.alpha(a, i) = information_gain(m);
      if (p.delta > 0.0) p.beta(a, i) = beta(p.B[static_cast<std::size_t>(i)], sigma, m.lambda, p.alpha(a, i), p.delta);
    }
  return p;
}

double epsilon_from_variance_bounds(const BoundParams& params, const std::vector<std::vector<double>>& var_max,
                                    Eigen::Index dimension) {
  if (params.mode == EpsilonMode::Explicit) return params.epsilon;
  double eps = 0.0;
  for (std::size_t k = 0; k < var_max.size(); ++k) {
    const auto a = static_cast<Eigen::Index>(k / static_cast<std::size_t>(dimension));
    const auto i = static_cast<Eigen::Index>(k % static_cast<std::size_t>(dimension));
    const double b = params.beta(a, i);
    const double scale = params.mode == EpsilonMode::DerivedLemma ? b : std::sqrt(b);
    for (double v : var_max[k]) eps = std::max(eps, scale * std::sqrt(std::max(0.0, v)));
  }
  if (!(eps >= 1e-12)) {
    log_warning("derived epsilon is " + std::to_string(eps) + "; applying the floor 1e-12");
    eps = 1e-12;
  }
  return eps;
}

double epsilon_from_delta(const BoundParams& params, const ModelSet& models, const Grid& grid, int subgrid_k,
                          unsigned threads) {
  if (models.empty()) throw StateError("epsilon_from_delta called before any model was fitted");
  if (params.mode == EpsilonMode::Explicit) return params.epsilon;
  std::vector<std::vector<double>> var_max(models.models.size(), std::vector<double>(grid.num_cells()));
  for (std::size_t k = 0; k < models.models.size(); ++k) {
    const auto& m = models.models[k];
    parallel_for(grid.num_cells(), threads,
                 [&](std::size_t q) { var_max[k][q] = var_max_over_box(m, grid.cell(q), subgrid_k); });
  }
  return epsilon_from_variance_bounds(params, var_max, models.dimension);
}

}  // namespace gpv
