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

#include "gpimdp/verifier.hpp"

#include "gpimdp/errors.hpp"
#include "gpimdp/log.hpp"
#include "gpimdp/parallel.hpp"
#include "gpimdp/text.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

namespace gpv {
namespace {

constexpr double kRowTolerance = 1e-9;

// States sorted by value (descending when maximize), ties by ascending index.
std::vector<std::size_t> value_order(const Eigen::VectorXd& values, bool maximize) {
  std::vector<std::size_t> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = values[static_cast<Eigen::Index>(a)], vb = values[static_cast<Eigen::Index>(b)];
    return maximize ? va > vb : va < vb;
  });
  return order;
}

struct RowContext {
  const Eigen::VectorXd& values;
  double total = 0.0;                          // sum of all values
  const std::vector<std::size_t>* order = nullptr;  // lazily needed for rows with a nonzero default width
};

double optimize_row(const ImdpRow& row, const RowContext& ctx, bool maximize, Distribution* out) {
  const auto n = static_cast<std::size_t>(ctx.values.size());
  const auto& v = ctx.values;
  double listed_value = 0.0, base = 0.0, lo_sum = 0.0, hi_sum = 0.0;
  for (const auto& e : row.entries) {
    const double ve = v[static_cast<Eigen::Index>(e.dest)];
    listed_value += ve;
    base += e.p.lo * ve;
    lo_sum += e.p.lo;
    hi_sum += e.p.hi;
  }
  const auto unlisted = static_cast<double>(n - row.entries.size());
  base += row.fallback.lo * (ctx.total - listed_value);
  lo_sum += unlisted * row.fallback.lo;
  hi_sum += unlisted * row.fallback.hi;
  if (lo_sum > 1.0 + kRowTolerance || hi_sum < 1.0 - kRowTolerance)
    throw SoundnessError("ill-formed row: sum of lower bounds " + std::to_string(lo_sum) + ", sum of upper bounds " +
                         std::to_string(hi_sum));
  double budget = std::max(0.0, 1.0 - lo_sum);
  double value = base;

  std::vector<std::pair<std::size_t, double>> extra;  // mass above the lower bound
  const double fallback_width = row.fallback.hi - row.fallback.lo;
  const bool use_listed_only = fallback_width <= 0.0 || row.entries.size() == n;

  auto give = [&](std::size_t s, double width) {
    const double amount = std::min(width, budget);
    if (amount <= 0.0) return;
    budget -= amount;
    value += amount * v[static_cast<Eigen::Index>(s)];
    if (out) extra.emplace_back(s, amount);
  };

  if (use_listed_only) {
    std::vector<const TransitionEntry*> order;
    order.reserve(row.entries.size());
    for (const auto& e : row.entries) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(), [&](const TransitionEntry* a, const TransitionEntry* b) {
      const double va = v[static_cast<Eigen::Index>(a->dest)], vb = v[static_cast<Eigen::Index>(b->dest)];
      if (va != vb) return maximize ? va > vb : va < vb;
      return a->dest < b->dest;
    });
    for (const auto* e : order) {
      if (budget <= 0.0) break;
      give(e->dest, e->p.hi - e->p.lo);
    }
  } else {
    std::vector<std::size_t> local;
    const std::vector<std::size_t>* order = ctx.order;
    if (!order) {
      local = value_order(v, maximize);
      order = &local;
    }
    for (std::size_t s : *order) {
      if (budget <= 0.0) break;
      const auto p = row.interval(s);
      give(s, p.hi - p.lo);
    }
  }

  if (out) {
    std::map<std::size_t, double> dist;
    for (const auto& e : row.entries)
      if (e.p.lo > 0.0) dist[e.dest] += e.p.lo;
    if (row.fallback.lo > 0.0) {
      for (std::size_t s = 0; s < n; ++s)
        if (row.interval(s) == row.fallback) dist[s] += row.fallback.lo;
    }
    for (const auto& [s, amount] : extra) dist[s] += amount;
    out->assign(dist.begin(), dist.end());
  }
  return value;
}

}  // namespace

AdversaryChoice o_optimize(const Eigen::VectorXd& values, const ImdpRow& row, bool maximize) {
  AdversaryChoice choice;
  RowContext ctx{values, values.sum(), nullptr};
  choice.value = optimize_row(row, ctx, maximize, &choice.distribution);
  return choice;
}

Eigen::VectorXd initial_values(const Imdp& imdp) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(imdp.num_states()));
  v[static_cast<Eigen::Index>(imdp.unsafe_state())] = 0.0;
  return v;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> bellman_step(const Imdp& imdp, const Eigen::VectorXd& prev_lower,
                                                         const Eigen::VectorXd& prev_upper, unsigned threads) {
  const std::size_t n = imdp.num_states();
  if (static_cast<std::size_t>(prev_lower.size()) != n || static_cast<std::size_t>(prev_upper.size()) != n)
    throw ConfigError("value vectors do not match the IMDP state count");

  bool needs_order = false;
  for (std::size_t q = 0; q < n && !needs_order; ++q)
    for (std::size_t a = 0; a < imdp.num_actions(); ++a) {
      const auto& r = imdp.row(q, a);
      if (r.fallback.hi > r.fallback.lo && r.entries.size() < n) {
        needs_order = true;
        break;
      }
    }
  std::vector<std::size_t> asc, desc;
  if (needs_order) {
    asc = value_order(prev_lower, false);
    desc = value_order(prev_upper, true);
  }
  const RowContext low_ctx{prev_lower, prev_lower.sum(), needs_order ? &asc : nullptr};
  const RowContext up_ctx{prev_upper, prev_upper.sum(), needs_order ? &desc : nullptr};

  Eigen::VectorXd lower(static_cast<Eigen::Index>(n)), upper(static_cast<Eigen::Index>(n));
  parallel_for(n, threads, [&](std::size_t q) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < imdp.num_actions(); ++a) {
      const auto& r = imdp.row(q, a);
      lo = std::min(lo, optimize_row(r, low_ctx, false, nullptr));
      hi = std::max(hi, optimize_row(r, up_ctx, true, nullptr));
    }
    lower[static_cast<Eigen::Index>(q)] = lo;
    upper[static_cast<Eigen::Index>(q)] = hi;
  });
  return {lower, upper};
}

SafetyBounds verify_finite(const Imdp& imdp, std::size_t horizon, double tol, unsigned threads) {
  SafetyBounds b;
  b.horizon = horizon;
  b.tolerance = tol;
  b.lower = initial_values(imdp);
  b.upper = b.lower;
  for (std::size_t k = 0; k < horizon; ++k) {
    auto [lo, hi] = bellman_step(imdp, b.lower, b.upper, threads);
    b.last_change = std::max((lo - b.lower).cwiseAbs().maxCoeff(), (hi - b.upper).cwiseAbs().maxCoeff());
    b.lower = std::move(lo);
    b.upper = std::move(hi);
    b.iterations_run = k + 1;
  }
  b.converged = b.last_change < tol;
  return b;
}

SafetyBounds verify_infinite(const Imdp& imdp, double tol, std::size_t max_iterations, unsigned threads) {
  if (!(tol > 0.0)) throw ConfigError("convergence tolerance must be positive");
  SafetyBounds b;
  b.tolerance = tol;
  b.lower = initial_values(imdp);
  b.upper = b.lower;
  while (b.iterations_run < max_iterations) {
    auto [lo, hi] = bellman_step(imdp, b.lower, b.upper, threads);
    b.last_change = std::max((lo - b.lower).cwiseAbs().maxCoeff(), (hi - b.upper).cwiseAbs().maxCoeff());
    b.lower = std::move(lo);
    b.upper = std::move(hi);
    ++b.iterations_run;
    if (b.last_change < tol) {
      b.converged = true;
      return b;
    }
  }
  log_warning("value iteration did not converge within " + std::to_string(max_iterations) +
              " iterations (last change " + std::to_string(b.last_change) + ")");
  return b;
}

void write_safety_csv(std::ostream& out, const SafetyBounds& bounds,
                      const std::vector<std::pair<std::string, std::string>>& extra) {
  using text::format_double;
  out << "# horizon=" << (bounds.horizon ? std::to_string(*bounds.horizon) : std::string("inf")) << '\n';
  out << "# tol=" << format_double(bounds.tolerance) << '\n';
  out << "# iterations=" << bounds.iterations_run << '\n';
  out << "# converged=" << (bounds.converged ? "true" : "false") << '\n';
  for (const auto& [k, v] : extra) out << "# " << k << '=' << v << '\n';
  out << "state_index,p_min,p_max\n";
  for (Eigen::Index q = 0; q < bounds.lower.size(); ++q)
    out << q << ',' << format_double(bounds.lower[q]) << ',' << format_double(bounds.upper[q]) << '\n';
}

SafetyBounds read_safety_csv(std::istream& in) {
  SafetyBounds b;
  std::map<std::string, std::string> meta;
  std::vector<double> lo, hi;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos)
        meta[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
      continue;
    }
    if (!header) {
      if (t != "state_index,p_min,p_max") throw ParseError("expected header state_index,p_min,p_max", lineno);
      header = true;
      continue;
    }
    const auto f = text::split(t, ',');
    if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
    try {
      if (text::parse_int(f[0]) != static_cast<long long>(lo.size())) throw ParseError("state indices must be consecutive");
      lo.push_back(text::parse_double(f[1]));
      hi.push_back(text::parse_double(f[2]));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!header) throw ParseError("results file has no header");
  b.lower = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  b.upper = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  if (meta.count("horizon") && meta["horizon"] != "inf")
    b.horizon = static_cast<std::size_t>(text::parse_int(meta["horizon"]));
  if (meta.count("tol")) b.tolerance = text::parse_double(meta["tol"]);
  if (meta.count("iterations")) b.iterations_run = static_cast<std::size_t>(text::parse_int(meta["iterations"]));
  b.converged = meta.count("converged") && meta["converged"] == "true";
  return b;
}

}  // namespace gpv
