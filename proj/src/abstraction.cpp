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

#include "gpimdp/errors.hpp"
#include "gpimdp/log.hpp"
#include "gpimdp/parallel.hpp"
#include "gpimdp/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace gpv {

TransitionInterval ImdpRow::interval(std::size_t dest) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), dest,
                                   [](const TransitionEntry& e, std::size_t d) { return e.dest < d; });
  if (it != entries.end() && it->dest == dest) return it->p;
  return fallback;
}

Imdp::Imdp(std::size_t num_states, std::vector<std::string> action_names, std::size_t unsafe)
    : num_states_(num_states), action_names_(std::move(action_names)), unsafe_(unsafe) {
  if (num_states_ < 1) throw ConfigError("an IMDP needs at least one state");
  if (action_names_.empty()) throw ConfigError("an IMDP needs at least one action");
  if (unsafe_ >= num_states_) throw ConfigError("unsafe state index out of range");
  rows_.resize(num_states_ * action_names_.size());
}

std::pair<double, double> row_sums(const ImdpRow& row, std::size_t num_states) {
  double lo = 0.0, hi = 0.0;
  for (const auto& e : row.entries) {
    lo += e.p.lo;
    hi += e.p.hi;
  }
  const auto unlisted = static_cast<double>(num_states - row.entries.size());
  lo += unlisted * row.fallback.lo;
  hi += unlisted * row.fallback.hi;
  return {lo, hi};
}

namespace {

std::string describe_row(const ImdpRow& row, std::size_t q, std::size_t a) {
  std::ostringstream os;
  os << "row (q=" << q << ", a=" << a << "): default [" << row.fallback.lo << ", " << row.fallback.hi << "]";
  for (const auto& e : row.entries) os << "; " << e.dest << " [" << e.p.lo << ", " << e.p.hi << "]";
  return os.str();
}

}  // namespace

void Imdp::validate(double tol) {
  for (std::size_t q = 0; q < num_states_; ++q)
    for (std::size_t a = 0; a < num_actions(); ++a) {
      auto& r = row(q, a);
      std::sort(r.entries.begin(), r.entries.end(),
                [](const TransitionEntry& x, const TransitionEntry& y) { return x.dest < y.dest; });
      for (std::size_t k = 0; k < r.entries.size(); ++k) {
        if (r.entries[k].dest >= num_states_)
          throw SoundnessError("destination out of range in " + describe_row(r, q, a));
        if (k && r.entries[k].dest == r.entries[k - 1].dest)
          throw SoundnessError("duplicate destination in " + describe_row(r, q, a));
        if (!r.entries[k].p.valid()) throw SoundnessError("invalid interval in " + describe_row(r, q, a));
      }
      if (r.entries.size() < num_states_ && !r.fallback.valid())
        throw SoundnessError("invalid default interval in " + describe_row(r, q, a));
      const auto [lo, hi] = row_sums(r, num_states_);
      if (lo > 1.0 + tol || hi < 1.0 - tol)
        throw SoundnessError("row violates sum(lo) <= 1 <= sum(hi) (sums " + std::to_string(lo) + ", " +
                             std::to_string(hi) + ") in " + describe_row(r, q, a));
    }
  for (std::size_t a = 0; a < num_actions(); ++a) {
    const auto self = row(unsafe_, a).interval(unsafe_);
    if (self.lo != 1.0 || self.hi != 1.0)
      throw SoundnessError("unsafe state is not absorbing in " + describe_row(row(unsafe_, a), unsafe_, a));
  }
}

Box mean_image_box(const ModelSet& models, std::size_t action, const Box& cell, int subgrid_k) {
  Box image(Eigen::VectorXd(models.dimension), Eigen::VectorXd(models.dimension));
  for (Eigen::Index i = 0; i < models.dimension; ++i) {
    const auto r = mean_range_over_box(models.at(action, i), cell, subgrid_k);
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
      throw NumericError("mean range over a cell is not finite (action " + std::to_string(action) + ", dim " +
                         std::to_string(i) + ")");
    image.lo[i] = r.lo;
    image.hi[i] = r.hi;
  }
  return image;
}

TransitionInterval transition_interval(const Box& image, const Box& target, double eps, double confidence) {
  TransitionInterval p;
  const auto reduced = shrink_box(target, eps);
  p.lo = reduced && reduced->strictly_contains(image) ? confidence : 0.0;
  p.hi = expand_box(target, eps).intersects(image) ? 1.0 : 1.0 - confidence;
  return p;
}

TransitionInterval transition_interval(const Box& image, const Box& target, double eps,
                                       const std::vector<double>& dimension_confidences) {
  double confidence = 1.0;
  for (double c : dimension_confidences) confidence *= c;
  return transition_interval(image, target, eps, confidence);
}

TransitionInterval unsafe_transition_interval(const Box& image, const Box& safe_box, double eps, double confidence) {
  const auto stay = transition_interval(image, safe_box, eps, confidence);
  return {1.0 - stay.hi, 1.0 - stay.lo};
}

Imdp build_imdp(const Grid& grid, const ModelSet& models, const AbstractionSettings& settings) {
  if (models.empty()) throw StateError("build_imdp needs fitted models");
  if (models.dimension != grid.dimension()) throw ConfigError("model dimension does not match the grid");
  if (!(settings.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (settings.subgrid_k < 1) throw ConfigError("abstraction.subgrid_k must be at least 1");
  if (settings.epsilon >= grid.cell_side() / 2.0)
    log_warning("epsilon " + std::to_string(settings.epsilon) + " >= h/2 = " + std::to_string(grid.cell_side() / 2) +
                ": every reduced cell is empty, so all lower bounds to safe cells are 0");

  const auto n = static_cast<int>(grid.dimension());
  const double conf = dimension_confidence(settings.delta, n);
  const double eps = settings.epsilon;
  const std::size_t m = grid.num_cells();
  const std::size_t unsafe = grid.unsafe_index();
  const auto& safe = grid.safe_box();
  const double h = grid.cell_side();
  const auto& shape = grid.shape();

  Imdp imdp(m + 1, models.action_names, unsafe);
  imdp.dimension = grid.dimension();
  imdp.delta = settings.delta;
  imdp.epsilon = eps;
  const TransitionInterval fallback{0.0, 1.0 - conf};

  for (std::size_t a = 0; a < models.num_actions(); ++a) {
    parallel_for(m, settings.threads, [&](std::size_t q) {
      const Box image = mean_image_box(models, a, grid.cell(q), settings.subgrid_k);
      ImdpRow row;
      row.fallback = fallback;

      // candidate destinations: cells within eps of the image, padded by one cell per side
      std::vector<std::size_t> first(shape.size()), last(shape.size());
      bool any = true;
      for (std::size_t i = 0; i < shape.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        const double from = std::floor((image.lo[e] - eps - safe.lo[e]) / h) - 1;
        const double to = std::floor((image.hi[e] + eps - safe.lo[e]) / h) + 1;
        const double top = static_cast<double>(shape[i] - 1);
        if (to < 0 || from > top) {
          any = false;
          break;
        }
        first[i] = static_cast<std::size_t>(std::max(0.0, from));
        last[i] = static_cast<std::size_t>(std::min(top, to));
      }
      if (any) {
        std::vector<std::size_t> idx = first;
        while (true) {
          const std::size_t dest = grid.flat_index(idx);
          const auto p = transition_interval(image, grid.cell(dest), eps, conf);
          if (p != fallback) row.entries.push_back({dest, p});
          std::size_t i = shape.size();
          while (i-- > 0) {
            if (idx[i] < last[i]) {
              ++idx[i];
              break;
            }
            idx[i] = first[i];
          }
          if (i == static_cast<std::size_t>(-1)) break;
        }
      }
      row.entries.push_back({unsafe, unsafe_transition_interval(image, safe, eps, conf)});
      imdp.row(q, a) = std::move(row);
    });
    ImdpRow absorbing;
    absorbing.fallback = {0.0, 0.0};
    absorbing.entries.push_back({unsafe, {1.0, 1.0}});
    imdp.row(unsafe, a) = absorbing;
  }
  imdp.validate();
  return imdp;
}

Imdp restrict_actions(const Imdp& imdp, const std::vector<std::size_t>& actions) {
  std::vector<std::string> names;
  for (auto a : actions) names.push_back(imdp.action_names().at(a));
  Imdp out(imdp.num_states(), names, imdp.unsafe_state());
  out.dimension = imdp.dimension;
  out.delta = imdp.delta;
  out.epsilon = imdp.epsilon;
  for (std::size_t q = 0; q < imdp.num_states(); ++q)
    for (std::size_t k = 0; k < actions.size(); ++k) out.row(q, k) = imdp.row(q, actions[k]);
  return out;
}

void export_imdp(std::ostream& out, const Imdp& imdp) {
  using text::format_double;
  const auto& ref = imdp.row(0, 0).fallback;
  out << "imdp 1\n";
  out << "states " << imdp.num_states() << '\n';
  out << "unsafe " << imdp.unsafe_state() << '\n';
  out << "actions " << imdp.num_actions();
  for (const auto& a : imdp.action_names()) out << ' ' << a;
  out << '\n';
  out << "dim " << imdp.dimension << '\n';
  out << "delta " << format_double(imdp.delta) << '\n';
  out << "epsilon " << format_double(imdp.epsilon) << '\n';
  out << "default " << format_double(ref.lo) << ' ' << format_double(ref.hi) << '\n';
  for (std::size_t q = 0; q < imdp.num_states(); ++q)
    for (std::size_t a = 0; a < imdp.num_actions(); ++a) {
      const auto& f = imdp.row(q, a).fallback;
      if (f != ref)
        out << "rowdefault " << q << ' ' << a << ' ' << format_double(f.lo) << ' ' << format_double(f.hi) << '\n';
    }
  for (std::size_t q = 0; q < imdp.num_states(); ++q)
    for (std::size_t a = 0; a < imdp.num_actions(); ++a)
      for (const auto& e : imdp.row(q, a).entries)
        out << q << ' ' << a << ' ' << e.dest << ' ' << format_double(e.p.lo) << ' ' << format_double(e.p.hi) << '\n';
}

Imdp import_imdp(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::vector<std::string>> header;
  const std::vector<std::string> required = {"states", "unsafe", "actions", "dim", "delta", "epsilon", "default"};

  auto next_tokens = [&](std::vector<std::string>& t) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto body = text::trim(line);
      if (body.empty() || body.front() == '#') continue;
      t = text::tokens(body);
      return true;
    }
    return false;
  };
  auto num = [&](const std::string& s) {
    try {
      return text::parse_double(s);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  };
  auto idx = [&](const std::string& s) {
    long long v;
    try {
      v = text::parse_int(s);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (v < 0) throw ParseError("negative index", lineno);
    return static_cast<std::size_t>(v);
  };

  std::vector<std::string> t;
  if (!next_tokens(t) || t.size() != 2 || t[0] != "imdp") throw ParseError("missing 'imdp' header", lineno);
  if (t[1] != "1") throw ParseError("unsupported IMDP format version " + t[1], lineno);

  bool more = next_tokens(t);
  while (more && !t.empty() && std::isalpha(static_cast<unsigned char>(t[0][0])) && t[0] != "rowdefault") {
    header[t[0]] = std::vector<std::string>(t.begin() + 1, t.end());
    more = next_tokens(t);
  }
  for (const auto& key : required)
    if (!header.count(key) || header[key].empty()) throw ParseError("header is missing '" + key + "'", lineno);

  const auto& acts = header["actions"];
  const std::size_t na = idx(acts[0]);
  if (acts.size() != na + 1) throw ParseError("action count does not match the listed names");
  Imdp imdp(idx(header["states"][0]), std::vector<std::string>(acts.begin() + 1, acts.end()),
            idx(header["unsafe"][0]));
  imdp.dimension = static_cast<Eigen::Index>(idx(header["dim"][0]));
  imdp.delta = num(header["delta"][0]);
  imdp.epsilon = num(header["epsilon"][0]);
  if (header["default"].size() != 2) throw ParseError("'default' needs two values");
  const TransitionInterval def{num(header["default"][0]), num(header["default"][1])};
  for (std::size_t q = 0; q < imdp.num_states(); ++q)
    for (std::size_t a = 0; a < imdp.num_actions(); ++a) imdp.row(q, a).fallback = def;

  for (; more; more = next_tokens(t)) {
    if (t[0] == "rowdefault") {
      if (t.size() != 5) throw ParseError("rowdefault needs q a lo hi", lineno);
      const auto q = idx(t[1]), a = idx(t[2]);
      if (q >= imdp.num_states() || a >= imdp.num_actions()) throw ParseError("rowdefault out of range", lineno);
      imdp.row(q, a).fallback = {num(t[3]), num(t[4])};
      continue;
    }
    if (t.size() != 5) throw ParseError("expected 'q a q' lo hi'", lineno);
    const auto q = idx(t[0]), a = idx(t[1]), dest = idx(t[2]);
    if (q >= imdp.num_states() || a >= imdp.num_actions() || dest >= imdp.num_states())
      throw ParseError("transition index out of range", lineno);
    imdp.row(q, a).entries.push_back({dest, {num(t[3]), num(t[4])}});
  }
  imdp.validate();
  return imdp;
}

}  // namespace gpv
