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

#include "gpimdp/config.hpp"

#include "gpimdp/dynamics.hpp"
#include "gpimdp/errors.hpp"
#include "gpimdp/text.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <vector>

namespace gpv {
namespace fs = std::filesystem;

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

double positive(const std::string& v) {
  const double d = text::parse_double(v);
  if (!(d > 0)) throw ConfigError("must be positive");
  return d;
}

std::size_t count(const std::string& v) {
  const long long n = text::parse_int(v);
  if (n < 0) throw ConfigError("must be nonnegative");
  return static_cast<std::size_t>(n);
}

std::vector<double> number_list(const std::string& v) {
  std::vector<double> out;
  for (auto& t : text::tokens(v)) {
    for (auto& piece : text::split(t, ','))
      if (!text::trim(piece).empty()) out.push_back(text::parse_double(piece));
  }
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"system.name", [](RunConfig& c, const std::string& v) { c.system = v; }},
      {"grid.safe_box",
       [](RunConfig& c, const std::string& v) {
         const auto nums = number_list(v);
         if (nums.empty() || nums.size() % 2) throw ConfigError("expected lo hi pairs per axis");
         const auto n = static_cast<Eigen::Index>(nums.size() / 2);
         c.safe_box = Box(Eigen::VectorXd(n), Eigen::VectorXd(n));
         for (Eigen::Index i = 0; i < n; ++i) {
           c.safe_box.lo[i] = nums[static_cast<std::size_t>(2 * i)];
           c.safe_box.hi[i] = nums[static_cast<std::size_t>(2 * i + 1)];
           if (!(c.safe_box.hi[i] > c.safe_box.lo[i])) throw ConfigError("axis " + std::to_string(i) + " is empty");
         }
       }},
      {"grid.h", [](RunConfig& c, const std::string& v) { c.h = positive(v); }},
      {"data.n_D",
       [](RunConfig& c, const std::string& v) {
         c.n_samples = count(v);
         if (c.n_samples < 1) throw ConfigError("must be at least 1");
       }},
      {"data.sigma",
       [](RunConfig& c, const std::string& v) {
         c.sigma = text::parse_double(v);
         if (!(c.sigma >= 0)) throw ConfigError("must be nonnegative");
       }},
      {"data.seed", [](RunConfig& c, const std::string& v) { c.seed = count(v); }},
      {"gp.lambda", [](RunConfig& c, const std::string& v) { c.lambda = positive(v); }},
      {"gp.signal_variance",
       [](RunConfig& c, const std::string& v) {
         if (!c.kernel) c.kernel = SeKernelParams{};
         c.kernel->signal_variance = positive(v);
       }},
      {"gp.lengthscale",
       [](RunConfig& c, const std::string& v) {
         if (!c.kernel) c.kernel = SeKernelParams{};
         c.kernel->lengthscale = positive(v);
       }},
      {"gp.signal_variance_range",
       [](RunConfig& c, const std::string& v) {
         const auto r = number_list(v);
         if (r.size() != 2 || !(r[0] > 0) || r[1] < r[0]) throw ConfigError("expected 0 < min <= max");
         c.hyper.signal_variance_min = r[0];
         c.hyper.signal_variance_max = r[1];
       }},
      {"gp.lengthscale_range",
       [](RunConfig& c, const std::string& v) {
         const auto r = number_list(v);
         if (r.size() != 2 || !(r[0] > 0) || r[1] < r[0]) throw ConfigError("expected 0 < min <= max");
         c.hyper.lengthscale_min = r[0];
         c.hyper.lengthscale_max = r[1];
       }},
      {"gp.points_per_decade",
       [](RunConfig& c, const std::string& v) { c.hyper.points_per_decade = static_cast<int>(count(v)); }},
      {"gp.coarse_points_per_decade",
       [](RunConfig& c, const std::string& v) { c.hyper.coarse_points_per_decade = static_cast<int>(count(v)); }},
      {"gp.hyper_max_points", [](RunConfig& c, const std::string& v) { c.hyper.max_points = count(v); }},
      {"bounds.delta",
       [](RunConfig& c, const std::string& v) {
         c.bounds.delta = text::parse_double(v);
         if (!(c.bounds.delta >= 0 && c.bounds.delta < 1)) throw ConfigError("must lie in [0,1)");
       }},
      {"bounds.B",
       [](RunConfig& c, const std::string& v) {
         c.bounds.B = number_list(v);
         for (double b : c.bounds.B)
           if (!(b > 0)) throw ConfigError("every B_i must be positive");
       }},
      {"bounds.epsilon_mode", [](RunConfig& c, const std::string& v) { c.bounds.mode = parse_epsilon_mode(v); }},
      {"bounds.epsilon", [](RunConfig& c, const std::string& v) { c.bounds.epsilon = positive(v); }},
      {"abstraction.subgrid_k",
       [](RunConfig& c, const std::string& v) {
         c.subgrid_k = static_cast<int>(count(v));
         if (c.subgrid_k < 1) throw ConfigError("must be at least 1");
       }},
      {"verify.horizon",
       [](RunConfig& c, const std::string& v) {
         if (v == "inf")
           c.horizon.reset();
         else
           c.horizon = count(v);
       }},
      {"verify.tolerance", [](RunConfig& c, const std::string& v) { c.tolerance = positive(v); }},
      {"mc.trials",
       [](RunConfig& c, const std::string& v) {
         c.mc_trials = count(v);
         if (c.mc_trials < 1) throw ConfigError("must be at least 1");
       }},
      {"mc.cells", [](RunConfig& c, const std::string& v) { c.mc_cells = count(v); }},
      {"mc.horizon", [](RunConfig& c, const std::string& v) { c.mc_horizon = count(v); }},
      {"mc.transition_triples", [](RunConfig& c, const std::string& v) { c.mc_triples = count(v); }},
      {"mc.samples_x",
       [](RunConfig& c, const std::string& v) {
         c.mc_samples_x = count(v);
         if (c.mc_samples_x < 1) throw ConfigError("must be at least 1");
       }},
      {"mc.noise_draws",
       [](RunConfig& c, const std::string& v) {
         c.mc_noise_draws = count(v);
         if (c.mc_noise_draws < 1) throw ConfigError("must be at least 1");
       }},
      {"mc.confidence",
       [](RunConfig& c, const std::string& v) {
         c.mc_confidence = text::parse_double(v);
         if (!(c.mc_confidence > 0 && c.mc_confidence < 1)) throw ConfigError("must lie in (0,1)");
       }},
      {"mc.seed", [](RunConfig& c, const std::string& v) { c.mc_seed = count(v); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"threads", [](RunConfig& c, const std::string& v) { c.threads = static_cast<unsigned>(count(v)); }},
      {"input.dataset", [](RunConfig& c, const std::string& v) { c.input_dataset = v; }},
      {"input.models", [](RunConfig& c, const std::string& v) { c.input_models = v; }},
      {"input.imdp", [](RunConfig& c, const std::string& v) { c.input_imdp = v; }},
      {"input.results", [](RunConfig& c, const std::string& v) { c.input_results = v; }},
  };
  return table;
}

const std::vector<std::string> kRequired = {"system.name", "grid.safe_box", "grid.h"};

RunConfig build(const std::map<std::string, std::string>& raw) {
  RunConfig c;
  c.raw = raw;
  std::vector<std::string> problems;
  for (const auto& key : kRequired)
    if (!raw.count(key)) problems.push_back(key + ": required key is missing");
  for (const auto& [key, value] : raw) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      problems.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->second(c, value);
    } catch (const std::exception& e) {
      problems.push_back(key + ": " + e.what() + " (value '" + value + "')");
    }
  }
  if (problems.empty()) {
    try {
      const auto spec = make_system(c.system);
      if (spec.dimension() != c.safe_box.dim())
        problems.push_back("grid.safe_box: has " + std::to_string(c.safe_box.dim()) + " axes but system '" +
                           c.system + "' has dimension " + std::to_string(spec.dimension()));
      if (c.bounds.mode == EpsilonMode::Explicit && !raw.count("bounds.epsilon"))
        problems.push_back("bounds.epsilon: required in explicit epsilon mode");
      if (c.bounds.mode != EpsilonMode::Explicit && !(c.bounds.delta > 0))
        problems.push_back("bounds.delta: must lie in (0,1) for derived epsilon modes");
      if (!c.bounds.B.empty() && static_cast<Eigen::Index>(c.bounds.B.size()) != spec.dimension())
        problems.push_back("bounds.B: needs one value per state dimension");
      if (c.kernel && !(raw.count("gp.signal_variance") && raw.count("gp.lengthscale")))
        problems.push_back("gp.signal_variance/gp.lengthscale: set both or neither");
    } catch (const ConfigError& e) {
      problems.push_back(std::string("system.name: ") + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return c;
}

}  // namespace

fs::path RunConfig::dataset_path() const { return input_dataset ? *input_dataset : output_dir / "dataset.csv"; }
fs::path RunConfig::models_path() const { return input_models ? *input_models : output_dir / "models.txt"; }
fs::path RunConfig::imdp_path() const { return input_imdp ? *input_imdp : output_dir / "imdp.txt"; }
fs::path RunConfig::results_path() const { return input_results ? *input_results : output_dir / "results.csv"; }

std::string RunConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& [k, v] : raw) {
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const auto body = text::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'section.key = value'");
    const std::string key(text::trim(body.substr(0, eq)));
    if (raw.count(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    raw[key] = std::string(text::trim(body.substr(eq + 1)));
  }
  return build(raw);
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  auto raw = config.raw;
  raw[std::string(text::trim(std::string_view(assignment).substr(0, eq)))] =
      std::string(text::trim(std::string_view(assignment).substr(eq + 1)));
  config = build(raw);
}

}  // namespace gpv
