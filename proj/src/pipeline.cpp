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

#include "gpimdp/pipeline.hpp"

#include "gpimdp/errors.hpp"
#include "gpimdp/log.hpp"
#include "gpimdp/parallel.hpp"
#include "gpimdp/text.hpp"
#include "gpimdp/validation.hpp"

#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace gpv {
namespace fs = std::filesystem;

Stage parse_stage(const std::string& name) {
  if (name == "generate") return Stage::Generate;
  if (name == "fit") return Stage::Fit;
  if (name == "abstract") return Stage::Abstract;
  if (name == "verify") return Stage::Verify;
  if (name == "mc-check") return Stage::McCheck;
  if (name == "pipeline") return Stage::Pipeline;
  throw ConfigError("unknown stage '" + name + "' (generate, fit, abstract, verify, mc-check, pipeline)");
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Generate: return "generate";
    case Stage::Fit: return "fit";
    case Stage::Abstract: return "abstract";
    case Stage::Verify: return "verify";
    case Stage::McCheck: return "mc-check";
    case Stage::Pipeline: return "pipeline";
  }
  return "unknown";
}

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_input(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " file '" + path.string() + "' does not exist");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + what + " file '" + path.string() + "'");
  return in;
}

DataSet load_dataset(const RunConfig& config) {
  auto in = open_input(config.dataset_path(), "dataset");
  return read_dataset_csv(in);
}

ModelSet load_models(const RunConfig& config) {
  auto in = open_input(config.models_path(), "model");
  return read_models(in);
}

Imdp load_imdp(const RunConfig& config) {
  auto in = open_input(config.imdp_path(), "IMDP");
  return import_imdp(in);
}

SafetyBounds load_results(const RunConfig& config) {
  auto in = open_input(config.results_path(), "results");
  return read_safety_csv(in);
}

}  // namespace

DataSet generate_for(const RunConfig& config) {
  return generate_dataset(make_system(config.system), config.safe_box, config.n_samples, config.sigma, config.seed);
}

ModelSet fit_models(const DataSet& data, const RunConfig& config) {
  ModelSet set;
  set.action_names = data.action_names;
  set.dimension = data.dimension;
  const std::size_t count = data.action_names.size() * static_cast<std::size_t>(data.dimension);
  set.models.resize(count);
  parallel_for(count, config.threads, [&](std::size_t k) {
    const ActionId a = k / static_cast<std::size_t>(data.dimension);
    const auto i = static_cast<Eigen::Index>(k % static_cast<std::size_t>(data.dimension));
    const auto n_a = data.partition(a).size();
    if (n_a == 0) throw ConfigError("no samples for action '" + data.action_names[a] + "'");
    const double lambda = config.lambda ? *config.lambda : default_lambda(n_a);
    const SeKernelParams params =
        config.kernel ? *config.kernel : optimize_hyperparameters(data, a, i, lambda, config.hyper).best;
    set.models[k] = fit(data, a, i, params, lambda);
  });
  for (const auto& m : set.models)
    log_info("fit " + set.action_names[m.action] + "[" + std::to_string(m.output_dim) +
             "]: sigma_f^2=" + text::format_double(m.kernel.signal_variance) +
             " lengthscale=" + text::format_double(m.kernel.lengthscale) + " lambda=" + text::format_double(m.lambda) +
             " points=" + std::to_string(m.size()));
  return set;
}

AbstractionResult abstract_models(const ModelSet& models, const RunConfig& config) {
  const Grid grid = build_grid(config.safe_box, config.h);
  BoundParams bounds = resolve_bound_params(models, config.bounds, config.sigma);
  bounds.epsilon = epsilon_from_delta(bounds, models, grid, config.subgrid_k, config.threads);
  AbstractionSettings settings;
  settings.epsilon = bounds.epsilon;
  settings.delta = bounds.delta;
  settings.subgrid_k = config.subgrid_k;
  settings.threads = config.threads;
  return {bounds, build_imdp(grid, models, settings)};
}

SafetyBounds verify_for(const Imdp& imdp, const RunConfig& config) {
  if (config.horizon) return verify_finite(imdp, *config.horizon, config.tolerance, config.threads);
  return verify_infinite(imdp, config.tolerance, 100000, config.threads);
}

std::vector<std::pair<std::string, std::string>> result_metadata(const RunConfig& config, const Imdp& imdp) {
  using text::format_double;
  std::vector<std::pair<std::string, std::string>> meta = {
      {"epsilon", format_double(imdp.epsilon)},
      {"delta", format_double(imdp.delta)},
      {"h", format_double(config.h)},
      {"T", config.horizon ? std::to_string(*config.horizon) : std::string("inf")},
      {"n_D", std::to_string(config.n_samples)},
      {"sigma", format_double(config.sigma)},
      {"seed", std::to_string(config.seed)},
      {"epsilon_mode", to_string(config.bounds.mode)},
  };
  for (const auto& [k, v] : config.raw) meta.emplace_back("config." + k, v);
  return meta;
}

void export_heatmap(std::ostream& out, const SafetyBounds& bounds, const Grid& grid) {
  using text::format_double;
  if (static_cast<std::size_t>(bounds.lower.size()) != grid.num_cells() + 1)
    throw ConfigError("results have " + std::to_string(bounds.lower.size()) + " states, grid has " +
                      std::to_string(grid.num_cells() + 1));
  if (grid.dimension() != 2) {
    log_info("heatmap geometry is 2-D only; writing index-only rows for a " + std::to_string(grid.dimension()) +
             "-D grid");
    out << "state_index,p_min,p_max\n";
    for (Eigen::Index q = 0; q < bounds.lower.size(); ++q)
      out << q << ',' << format_double(bounds.lower[q]) << ',' << format_double(bounds.upper[q]) << '\n';
    return;
  }
  out << "x_lo,x_hi,y_lo,y_hi,p_min,p_max\n";
  for (std::size_t q = 0; q < grid.num_cells(); ++q) {
    const Box c = grid.cell(q);
    const auto e = static_cast<Eigen::Index>(q);
    out << format_double(c.lo[0]) << ',' << format_double(c.hi[0]) << ',' << format_double(c.lo[1]) << ','
        << format_double(c.hi[1]) << ',' << format_double(bounds.lower[e]) << ',' << format_double(bounds.upper[e])
        << '\n';
  }
  const auto u = static_cast<Eigen::Index>(grid.unsafe_index());
  out << ",,,," << format_double(bounds.lower[u]) << ',' << format_double(bounds.upper[u]) << '\n';
}

SafetyBounds read_heatmap_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty heatmap file", 1);
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 3 || header[header.size() - 2] != "p_min" || header.back() != "p_max")
    throw ParseError("unrecognized heatmap header", 1);
  std::vector<double> lo, hi;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != header.size()) throw ParseError("wrong field count", lineno);
    try {
      lo.push_back(text::parse_double(f[f.size() - 2]));
      hi.push_back(text::parse_double(f.back()));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  SafetyBounds b;
  b.lower = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  b.upper = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  return b;
}

namespace {

void write_bounds_report(std::ostream& out, const BoundParams& b, const ModelSet& models, const RunConfig& config) {
  using text::format_double;
  out << "# bound parameters\n";
  out << "epsilon_mode=" << to_string(b.mode) << '\n';
  out << "epsilon=" << format_double(b.epsilon) << '\n';
  out << "delta=" << format_double(b.delta) << '\n';
  out << "sigma=" << format_double(b.sigma) << '\n';
  out << "B_source=" << (b.B_is_proxy ? "data proxy sqrt(Y^T (K + lambda I)^-1 Y), not certified" : "config") << '\n';
  for (std::size_t i = 0; i < b.B.size(); ++i) out << "B[" << i << "]=" << format_double(b.B[i]) << '\n';
  for (std::size_t a = 0; a < models.num_actions(); ++a)
    for (Eigen::Index i = 0; i < models.dimension; ++i) {
      const auto ai = static_cast<Eigen::Index>(a);
      out << "action=" << models.action_names[a] << " dim=" << i << " lambda=" << format_double(models.at(a, i).lambda)
          << " alpha=" << format_double(b.alpha(ai, i)) << " beta=" << format_double(b.beta(ai, i)) << '\n';
    }
  for (const auto& key : {"bounds.delta", "bounds.B", "bounds.epsilon_mode", "bounds.epsilon"})
    if (config.raw.count(key)) out << "config." << key << '=' << config.raw.at(key) << '\n';
}

void run_mc_check(const RunConfig& config, std::vector<fs::path>& artifacts) {
  const auto models = load_models(config);
  const auto imdp = load_imdp(config);
  const auto results = load_results(config);
  const SystemSpec spec = make_system(config.system);
  const Grid grid = build_grid(config.safe_box, config.h);
  if (imdp.num_states() != grid.num_cells() + 1 || static_cast<std::size_t>(results.lower.size()) != imdp.num_states())
    throw ConfigError("IMDP, results and grid disagree on the number of states");
  if (models.action_names != spec.action_names() || imdp.action_names() != spec.action_names())
    throw ConfigError("models or IMDP were built for different actions than system '" + config.system + "'");

  const bool infinite = !results.horizon;
  const std::size_t T = config.mc_horizon ? *config.mc_horizon : (results.horizon ? *results.horizon : 100);
  std::vector<std::pair<std::string, Strategy>> strategies;
  for (std::size_t a = 0; a < spec.num_actions(); ++a)
    strategies.emplace_back("const_" + spec.action_names()[a], constant_strategy(a));
  strategies.emplace_back("uniform_random", uniform_random_strategy(spec.num_actions()));

  std::vector<std::size_t> cells;
  const std::size_t wanted = config.mc_cells == 0 ? grid.num_cells() : std::min(config.mc_cells, grid.num_cells());
  for (std::size_t k = 0; k < wanted; ++k) cells.push_back(k * grid.num_cells() / wanted);

  const auto meta = result_metadata(config, imdp);
  std::size_t checked = 0, consistent = 0;
  {
    const fs::path path = config.output_dir / "mc_report.csv";
    auto out = open_output(path);
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
    out << "# mc_horizon=" << T << '\n';
    out << "cell,strategy,successes,trials,point_estimate,ci_low,ci_high,p_min,p_max,consistent\n";
    for (std::size_t q : cells) {
      const Eigen::VectorXd x0 = grid.cell(q).center();
      const auto e = static_cast<Eigen::Index>(q);
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        const auto r = monte_carlo_safety(spec, grid.safe_box(), x0, strategies[s].second, T, config.sigma,
                                          config.mc_trials, config.mc_seed + 1000003ull * q + s, config.mc_confidence);
        const bool ok = r.ci_high >= results.lower[e] && (infinite || r.ci_low <= results.upper[e]);
        ++checked;
        consistent += ok;
        out << q << ',' << strategies[s].first << ',';
        write_mc_row(out, r);
        out << ',' << text::format_double(results.lower[e]) << ',' << text::format_double(results.upper[e]) << ','
            << (ok ? 1 : 0) << '\n';
      }
    }
    artifacts.push_back(path);
  }

  std::size_t triples_ok = 0;
  {
    const fs::path path = config.output_dir / "mc_transitions.csv";
    auto out = open_output(path);
    out << "q,a,q_prime,p_low,p_high,min_estimate,min_ci_high,max_estimate,max_ci_low,consistent\n";
    Rng rng(config.mc_seed);
    std::uniform_int_distribution<std::size_t> pick_cell(0, grid.num_cells() - 1);
    std::uniform_int_distribution<std::size_t> pick_action(0, spec.num_actions() - 1);
    for (std::size_t t = 0; t < config.mc_triples; ++t) {
      const std::size_t q = pick_cell(rng);
      const std::size_t a = pick_action(rng);
      std::size_t dest = pick_cell(rng);
      const auto& entries = imdp.row(q, a).entries;
      if (rng() % 2 == 0 && entries.size() > 1) dest = entries[rng() % (entries.size() - 1)].dest;
      if (dest == grid.unsafe_index()) dest = pick_cell(rng);
      const auto p = imdp.interval(q, a, dest);
      const auto env = empirical_transition_check(grid.cell(q), a, grid.cell(dest), spec, config.sigma,
                                                  config.mc_samples_x, config.mc_noise_draws, rng(),
                                                  config.mc_confidence);
      const bool ok = envelope_consistent(p, env);
      triples_ok += ok;
      out << q << ',' << a << ',' << dest << ',' << text::format_double(p.lo) << ',' << text::format_double(p.hi)
          << ',' << text::format_double(env.min_estimate.point_estimate) << ','
          << text::format_double(env.min_estimate.ci_high) << ',' << text::format_double(env.max_estimate.point_estimate)
          << ',' << text::format_double(env.max_estimate.ci_low) << ',' << (ok ? 1 : 0) << '\n';
    }
    artifacts.push_back(path);
  }

  // largest observed |mu - f| against the epsilon the abstraction assumed
  double max_error = 0.0;
  {
    Rng rng(config.mc_seed + 17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& box = grid.safe_box();
    for (int s = 0; s < 2000; ++s) {
      Eigen::VectorXd x(box.dim());
      for (Eigen::Index i = 0; i < box.dim(); ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
      for (std::size_t a = 0; a < spec.num_actions(); ++a) {
        const Eigen::VectorXd fx = spec.step(x, a);
        for (Eigen::Index i = 0; i < box.dim(); ++i)
          max_error = std::max(max_error, std::abs(posterior_mean(models.at(a, i), x) - fx[i]));
      }
    }
  }
  const fs::path path = config.output_dir / "mc_summary.txt";
  auto out = open_output(path);
  out << "safety_checks=" << checked << "\nsafety_consistent=" << consistent << '\n';
  out << "transition_checks=" << config.mc_triples << "\ntransition_consistent=" << triples_ok << '\n';
  out << "max_mean_error=" << text::format_double(max_error) << "\nepsilon=" << text::format_double(imdp.epsilon)
      << '\n';
  if (max_error > imdp.epsilon)
    log_warning("observed |mu - f| = " + std::to_string(max_error) + " exceeds epsilon " +
                std::to_string(imdp.epsilon) + "; the abstraction's error assumption does not hold for this model");
  log_info("mc-check: " + std::to_string(consistent) + "/" + std::to_string(checked) + " safety checks and " +
           std::to_string(triples_ok) + "/" + std::to_string(config.mc_triples) + " transition checks consistent");
  artifacts.push_back(path);
}

void run_one(const RunConfig& config, Stage stage, std::vector<fs::path>& artifacts) {
  switch (stage) {
    case Stage::Generate: {
      const auto data = generate_for(config);
      const fs::path path = config.output_dir / "dataset.csv";
      auto out = open_output(path);
      write_dataset_csv(out, data);
      artifacts.push_back(path);
      break;
    }
    case Stage::Fit: {
      const auto data = load_dataset(config);
      const auto models = fit_models(data, config);
      const fs::path path = config.output_dir / "models.txt";
      auto out = open_output(path);
      write_models(out, models);
      artifacts.push_back(path);
      break;
    }
    case Stage::Abstract: {
      const auto models = load_models(config);
      const auto result = abstract_models(models, config);
      const fs::path path = config.output_dir / "imdp.txt";
      {
        auto out = open_output(path);
        export_imdp(out, result.imdp);
      }
      const fs::path report = config.output_dir / "bounds.txt";
      auto out = open_output(report);
      write_bounds_report(out, result.bounds, models, config);
      artifacts.push_back(path);
      artifacts.push_back(report);
      break;
    }
    case Stage::Verify: {
      const auto imdp = load_imdp(config);
      const Grid grid = build_grid(config.safe_box, config.h);
      if (imdp.num_states() != grid.num_cells() + 1)
        throw ConfigError("IMDP has " + std::to_string(imdp.num_states()) + " states but the grid has " +
                          std::to_string(grid.num_cells()) + " cells");
      const auto bounds = verify_for(imdp, config);
      const fs::path path = config.output_dir / "results.csv";
      {
        auto out = open_output(path);
        write_safety_csv(out, bounds, result_metadata(config, imdp));
      }
      const fs::path heat = config.output_dir / "heatmap.csv";
      auto out = open_output(heat);
      export_heatmap(out, bounds, grid);
      artifacts.push_back(path);
      artifacts.push_back(heat);
      break;
    }
    case Stage::McCheck: run_mc_check(config, artifacts); break;
    case Stage::Pipeline:
      for (Stage s : {Stage::Generate, Stage::Fit, Stage::Abstract, Stage::Verify, Stage::McCheck})
        run_one(config, s, artifacts);
      break;
  }
}

}  // namespace

StageReport run_stage(const RunConfig& config, Stage stage) {
  const auto start = std::chrono::steady_clock::now();
  StageReport report;
  run_one(config, stage, report.artifacts);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto out = open_output(config.output_dir / "manifest.txt");
  out << "tool=gpimdp " << kToolVersion << '\n';
  out << "stage=" << to_string(stage) << '\n';
  out << "config_hash=" << config.hash() << '\n';
  out << "wall_seconds=" << report.wall_seconds << '\n';
  for (const auto& a : report.artifacts) out << "artifact=" << a.string() << '\n';
  return report;
}

}  // namespace gpv
