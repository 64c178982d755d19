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

#include "gpimdp/dynamics.hpp"

#include "gpimdp/errors.hpp"
#include "gpimdp/text.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>

namespace gpv {

SystemSpec::SystemSpec(std::string name, Eigen::Index dimension)
    : name_(std::move(name)), dimension_(dimension) {
  if (dimension_ < 1) throw ConfigError("system dimension must be positive");
}

SystemSpec& SystemSpec::add_linear(std::string action, const Eigen::MatrixXd& A) {
  if (A.rows() != dimension_ || A.cols() != dimension_)
    throw ConfigError("action '" + action + "': matrix is " + std::to_string(A.rows()) + "x" +
                      std::to_string(A.cols()) + ", expected " + std::to_string(dimension_) + "x" +
                      std::to_string(dimension_));
  return add_map(std::move(action), [A](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; });
}

SystemSpec& SystemSpec::add_map(std::string action, DynamicsMap map) {
  for (const auto& existing : actions_)
    if (existing == action) throw ConfigError("duplicate action identifier '" + action + "'");
  actions_.push_back(std::move(action));
  maps_.push_back(std::move(map));
  return *this;
}

ActionId SystemSpec::action_index(const std::string& action) const {
  for (std::size_t a = 0; a < actions_.size(); ++a)
    if (actions_[a] == action) return a;
  throw ConfigError("unknown action '" + action + "' for system '" + name_ + "'");
}

Eigen::VectorXd SystemSpec::step(const Eigen::VectorXd& x, ActionId a) const {
  if (a >= maps_.size())
    throw ConfigError("action index " + std::to_string(a) + " out of range for system '" + name_ + "'");
  if (x.size() != dimension_) throw ConfigError("state has dimension " + std::to_string(x.size()));
  return maps_[a](x);
}

Eigen::Matrix2d rotation_matrix() {
  Eigen::Matrix2d A;
  A << 0.9, -0.4, 0.4, 0.5;
  return A;
}

Eigen::Matrix2d upper_matrix() {
  Eigen::Matrix2d A;
  A << 0.8, 0.5, 0.0, 0.5;
  return A;
}

Eigen::Matrix2d lower_matrix() {
  Eigen::Matrix2d A;
  A << 0.5, 0.0, -0.5, 0.8;
  return A;
}

namespace {

Eigen::MatrixXd parse_matrix_literal(std::string_view literal) {
  std::string_view s = text::trim(literal);
  if (s.size() < 4 || s.substr(0, 2) != "[[" || s.substr(s.size() - 2) != "]]")
    throw ConfigError("matrix literal must look like [[a,b],[c,d]], got '" + std::string(literal) + "'");
  s = s.substr(2, s.size() - 4);
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find("],[", start);
    const auto row_text = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    std::vector<double> row;
    for (const auto& field : text::split(row_text, ',')) row.push_back(text::parse_double(field));
    rows.push_back(std::move(row));
    if (pos == std::string_view::npos) break;
    start = pos + 3;
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != n)
      throw ConfigError("matrix literal must be square");
    for (Eigen::Index c = 0; c < n; ++c) A(r, c) = rows[r][c];
  }
  return A;
}

}  // namespace

SystemSpec make_system(const std::string& selector) {
  if (selector == "rotation") return SystemSpec("rotation", 2).add_linear("rotation", rotation_matrix());
  if (selector == "upper") return SystemSpec("upper", 2).add_linear("upper", upper_matrix());
  if (selector == "lower") return SystemSpec("lower", 2).add_linear("lower", lower_matrix());
  if (selector == "switched")
    return SystemSpec("switched", 2).add_linear("upper", upper_matrix()).add_linear("lower", lower_matrix());
  if (selector == "nonlinear") {
    return SystemSpec("nonlinear", 2).add_map("nonlinear", [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      Eigen::VectorXd next(2);
      next << x[0] - 0.05 * x[1], x[1] + 0.1 * std::sin(x[0]);
      return next;
    });
  }
  if (selector.rfind("linear:", 0) == 0) {
    const Eigen::MatrixXd A = parse_matrix_literal(std::string_view(selector).substr(7));
    return SystemSpec(selector, A.rows()).add_linear("linear", A);
  }
  throw ConfigError("unknown system '" + selector +
                    "' (expected rotation, upper, lower, switched, nonlinear or linear:[[..]])");
}

Eigen::VectorXd step_true(const SystemSpec& spec, const Eigen::VectorXd& x, const std::string& action) {
  return spec.step(x, spec.action_index(action));
}

Eigen::VectorXd step_true(const SystemSpec& spec, const Eigen::VectorXd& x, ActionId action) {
  return spec.step(x, action);
}

Eigen::VectorXd sample_noise(Rng& rng, double sigma, Eigen::Index n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (sigma <= 0.0) return v;
  std::uniform_real_distribution<double> dist(-sigma, sigma);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

std::vector<std::size_t> DataSet::partition(ActionId a) const {
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < samples.size(); ++s)
    if (samples[s].u == a) idx.push_back(s);
  return idx;
}

Eigen::MatrixXd DataSet::inputs(ActionId a) const {
  const auto idx = partition(a);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), dimension);
  for (std::size_t r = 0; r < idx.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = samples[idx[r]].x.transpose();
  return X;
}

Eigen::VectorXd DataSet::targets(ActionId a, Eigen::Index i) const {
  const auto idx = partition(a);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) Y[static_cast<Eigen::Index>(r)] = samples[idx[r]].y[i];
  return Y;
}

DataSet generate_dataset(const SystemSpec& spec, const Box& region, std::size_t n_samples, double sigma,
                         std::uint64_t seed) {
  if (region.dim() != spec.dimension()) throw ConfigError("sampling region dimension does not match the system");
  if (region.empty() || ((region.hi - region.lo).array() <= 0).any())
    throw ConfigError("sampling region is empty");
  if (n_samples < 1) throw ConfigError("n_D must be at least 1");
  if (sigma < 0) throw ConfigError("noise bound sigma must be nonnegative");

  DataSet data;
  data.system = spec.name();
  data.action_names = spec.action_names();
  data.dimension = spec.dimension();
  data.noise_bound = sigma;
  data.seed = seed;
  data.samples.reserve(n_samples);

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, spec.num_actions() - 1);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Sample sample;
    sample.x.resize(spec.dimension());
    for (Eigen::Index i = 0; i < spec.dimension(); ++i)
      sample.x[i] = region.lo[i] + (region.hi[i] - region.lo[i]) * unit(rng);
    sample.u = spec.num_actions() == 1 ? 0 : pick(rng);
    sample.y = spec.step(sample.x, sample.u) + sample_noise(rng, sigma, spec.dimension());
    data.samples.push_back(std::move(sample));
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const DataSet& data) {
  out << "# system=" << data.system << '\n';
  out << "# actions=";
  for (std::size_t a = 0; a < data.action_names.size(); ++a) out << (a ? "," : "") << data.action_names[a];
  out << '\n';
  out << "# sigma=" << text::format_double(data.noise_bound) << '\n';
  out << "# seed=" << data.seed << '\n';
  const auto n = data.dimension;
  for (Eigen::Index i = 0; i < n; ++i) out << 'x' << i + 1 << ',';
  out << 'u';
  for (Eigen::Index i = 0; i < n; ++i) out << ",y" << i + 1;
  out << '\n';
  for (const auto& s : data.samples) {
    for (Eigen::Index i = 0; i < n; ++i) out << text::format_double(s.x[i]) << ',';
    out << data.action_names.at(s.u);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << text::format_double(s.y[i]);
    out << '\n';
  }
}

DataSet read_dataset_csv(std::istream& in) {
  DataSet data;
  std::map<std::string, std::string> meta;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos)
        meta[std::string(text::trim(body.substr(0, eq)))] = std::string(text::trim(body.substr(eq + 1)));
      continue;
    }
    const auto fields = text::split(t, ',');
    if (!have_header) {
      if (fields.size() < 3 || fields.size() % 2 == 0 || fields[fields.size() / 2] != "u")
        throw ParseError("expected header x1,..,xn,u,y1,..,yn", lineno);
      data.dimension = static_cast<Eigen::Index>(fields.size() / 2);
      if (!meta.count("sigma") || !meta.count("actions"))
        throw ParseError("dataset metadata must record sigma and actions before the header", lineno);
      data.system = meta.count("system") ? meta["system"] : "";
      data.action_names = text::split(meta["actions"], ',');
      data.noise_bound = text::parse_double(meta["sigma"]);
      data.seed = meta.count("seed") ? static_cast<std::uint64_t>(text::parse_int(meta["seed"])) : 0;
      have_header = true;
      continue;
    }
    if (static_cast<Eigen::Index>(fields.size()) != 2 * data.dimension + 1)
      throw ParseError("expected " + std::to_string(2 * data.dimension + 1) + " fields", lineno);
    Sample s;
    s.x.resize(data.dimension);
    s.y.resize(data.dimension);
    try {
      for (Eigen::Index i = 0; i < data.dimension; ++i) {
        s.x[i] = text::parse_double(fields[i]);
        s.y[i] = text::parse_double(fields[data.dimension + 1 + i]);
      }
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    const auto& name = fields[data.dimension];
    bool found = false;
    for (std::size_t a = 0; a < data.action_names.size(); ++a)
      if (data.action_names[a] == name) {
        s.u = a;
        found = true;
      }
    if (!found) throw ParseError("unknown action '" + name + "'", lineno);
    data.samples.push_back(std::move(s));
  }
  if (!have_header) throw ParseError("dataset has no header line");
  return data;
}

}  // namespace gpv
