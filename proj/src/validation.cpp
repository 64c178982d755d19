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

#include "gpimdp/validation.hpp"

#include "gpimdp/errors.hpp"
#include "gpimdp/text.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace gpv {

std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw ConfigError("Clopper-Pearson interval needs at least one trial");
  if (successes > trials) throw ConfigError("more successes than trials");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0,1)");
  const double alpha = 1.0 - confidence;
  const auto k = static_cast<double>(successes), n = static_cast<double>(trials);
  const double lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
  const double hi = successes == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
  return {lo, hi};
}

McResult make_mc_result(std::size_t successes, std::size_t trials, double confidence) {
  McResult r;
  r.successes = successes;
  r.trials = trials;
  r.point_estimate = static_cast<double>(successes) / static_cast<double>(trials);
  std::tie(r.ci_low, r.ci_high) = clopper_pearson(successes, trials, confidence);
  r.ci_low = std::min(r.ci_low, r.point_estimate);
  r.ci_high = std::max(r.ci_high, r.point_estimate);
  return r;
}

Strategy constant_strategy(ActionId a) {
  return [a](std::span<const Eigen::VectorXd>, Rng&) { return a; };
}

Strategy uniform_random_strategy(std::size_t num_actions) {
  if (num_actions == 0) throw ConfigError("strategy needs at least one action");
  return [num_actions](std::span<const Eigen::VectorXd>, Rng& rng) {
    return std::uniform_int_distribution<ActionId>(0, num_actions - 1)(rng);
  };
}

McResult monte_carlo_safety(const SystemSpec& spec, const Box& safe_box, const Eigen::VectorXd& x0,
                            const Strategy& strategy, std::size_t horizon, double sigma, std::size_t trials,
                            std::uint64_t seed, double confidence) {
  if (trials < 1) throw ConfigError("monte_carlo_safety needs at least one trial");
  std::size_t safe_runs = 0;
  std::vector<Eigen::VectorXd> observations;
  for (std::size_t t = 0; t < trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
    Rng rng(seq);
    observations.clear();
    Eigen::VectorXd x = x0;
    bool safe = safe_box.contains(x);
    for (std::size_t k = 0; safe && k < horizon; ++k) {
      observations.push_back(x + sample_noise(rng, sigma, x.size()));
      const ActionId a = strategy(observations, rng);
      x = spec.step(x, a);
      safe = safe_box.contains(x);
    }
    if (safe) ++safe_runs;
  }
  return make_mc_result(safe_runs, trials, confidence);
}

namespace {

// Extreme point of the row polytope generated by filling destinations in `order`.
std::vector<double> vertex(const ImdpRow& row, const std::vector<std::size_t>& order) {
  std::vector<double> p(order.size());
  double budget = 1.0;
  for (std::size_t s = 0; s < order.size(); ++s) {
    p[s] = row.interval(s).lo;
    budget -= p[s];
  }
  for (std::size_t s : order) {
    const auto iv = row.interval(s);
    const double add = std::clamp(budget, 0.0, iv.hi - iv.lo);
    p[s] += add;
    budget -= add;
  }
  return p;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> enumerate_extreme_adversaries(const Imdp& imdp, std::size_t horizon) {
  const std::size_t n = imdp.num_states();
  if (n > 5 || imdp.num_actions() > 2 || horizon > 5)
    throw SizeError("exhaustive enumeration is limited to 5 states, 2 actions and horizon 5");

  // all extreme points per (state, action)
  std::vector<std::vector<std::vector<double>>> vertices(n * imdp.num_actions());
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t a = 0; a < imdp.num_actions(); ++a) {
      const auto& row = imdp.row(q, a);
      const auto [lo, hi] = row_sums(row, n);
      if (lo > 1.0 + 1e-12 || hi < 1.0 - 1e-12) throw SoundnessError("ill-formed row in enumeration oracle");
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      do {
        vertices[q * imdp.num_actions() + a].push_back(vertex(row, order));
      } while (std::next_permutation(order.begin(), order.end()));
    }

  Eigen::VectorXd lower = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  lower[static_cast<Eigen::Index>(imdp.unsafe_state())] = 0.0;
  Eigen::VectorXd upper = lower;
  for (std::size_t k = 0; k < horizon; ++k) {
    Eigen::VectorXd next_lo(static_cast<Eigen::Index>(n)), next_hi(static_cast<Eigen::Index>(n));
    for (std::size_t q = 0; q < n; ++q) {
      double best_lo = std::numeric_limits<double>::infinity();
      double best_hi = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < imdp.num_actions(); ++a)
        for (const auto& p : vertices[q * imdp.num_actions() + a]) {
          double vlo = 0.0, vhi = 0.0;
          for (std::size_t s = 0; s < n; ++s) {
            vlo += p[s] * lower[static_cast<Eigen::Index>(s)];
            vhi += p[s] * upper[static_cast<Eigen::Index>(s)];
          }
          best_lo = std::min(best_lo, vlo);
          best_hi = std::max(best_hi, vhi);
        }
      next_lo[static_cast<Eigen::Index>(q)] = best_lo;
      next_hi[static_cast<Eigen::Index>(q)] = best_hi;
    }
    lower = next_lo;
    upper = next_hi;
  }
  return {lower, upper};
}

TransitionEnvelope empirical_transition_check(const Box& cell, ActionId a, const Box& target, const SystemSpec& spec,
                                              double sigma, std::size_t samples_x, std::size_t noise_draws,
                                              std::uint64_t seed, double confidence) {
  if (samples_x < 1 || noise_draws < 1) throw ConfigError("need at least one state sample and one noise draw");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TransitionEnvelope env;
  std::size_t lowest = noise_draws + 1, highest = 0;
  for (std::size_t s = 0; s < samples_x; ++s) {
    Eigen::VectorXd x(cell.dim());
    for (Eigen::Index i = 0; i < cell.dim(); ++i) x[i] = cell.lo[i] + (cell.hi[i] - cell.lo[i]) * unit(rng);
    const Eigen::VectorXd fx = spec.step(x, a);
    std::size_t hits = 0;
    for (std::size_t d = 0; d < noise_draws; ++d)
      if (target.contains(Eigen::VectorXd(fx + sample_noise(rng, sigma, fx.size())))) ++hits;
    lowest = std::min(lowest, hits);
    highest = std::max(highest, hits);
  }
  env.min_estimate = make_mc_result(lowest, noise_draws, confidence);
  env.max_estimate = make_mc_result(highest, noise_draws, confidence);
  return env;
}

bool envelope_consistent(const TransitionInterval& interval, const TransitionEnvelope& envelope) {
  return interval.lo <= envelope.min_estimate.ci_high && interval.hi >= envelope.max_estimate.ci_low;
}

void write_mc_row(std::ostream& out, const McResult& r) {
  out << r.successes << ',' << r.trials << ',' << text::format_double(r.point_estimate) << ','
      << text::format_double(r.ci_low) << ',' << text::format_double(r.ci_high);
}

}  // namespace gpv
