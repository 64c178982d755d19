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

#include "gpimdp/gp.hpp"

#include "gpimdp/text.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace gpv {

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const SeKernelParams& params,
                               double lambda) {
  Eigen::MatrixXd A = kernel_matrix(params, X);
  A.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(Y);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * Y.dot(alpha) - 0.5 * log_det -
         0.5 * static_cast<double>(Y.size()) * std::log(2.0 * std::numbers::pi);
}

HyperSearchResult search_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                                         const std::vector<SeKernelParams>& candidates) {
  if (candidates.empty()) throw ConfigError("hyperparameter search needs at least one candidate");
  HyperSearchResult result;
  result.evaluated.reserve(candidates.size());
  double best = -std::numeric_limits<double>::infinity();
  result.best = candidates.front();
  for (const auto& c : candidates) {
    const double ll = log_marginal_likelihood(X, Y, c, lambda);
    result.evaluated.push_back({c, ll});
    if (ll > best) {
      best = ll;
      result.best = c;
    }
  }
  return result;
}

namespace {

// Lattice exponents lo, lo + 1/ppd, ... within [from, to] (all in log10 units).
std::vector<double> lattice(double lo, double hi, int ppd, double from, double to) {
  std::vector<double> out;
  const long steps = std::lround((hi - lo) * ppd);
  for (long s = 0; s <= steps; ++s) {
    const double e = lo + static_cast<double>(s) / ppd;
    if (e >= from - 1e-9 && e <= to + 1e-9) out.push_back(e);
  }
  return out;
}

}  // namespace

HyperSearchResult optimize_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, double lambda,
                                           const HyperGrid& grid) {
  if (X.rows() < 10)
    throw ConfigError("hyperparameter optimization needs at least 10 points, got " + std::to_string(X.rows()));
  if (!(grid.signal_variance_min > 0 && grid.signal_variance_min <= grid.signal_variance_max &&
        grid.lengthscale_min > 0 && grid.lengthscale_min <= grid.lengthscale_max && grid.points_per_decade >= 1 &&
        grid.coarse_points_per_decade >= 1))
    throw ConfigError("invalid hyperparameter grid");

  const double s_lo = std::log10(grid.signal_variance_min), s_hi = std::log10(grid.signal_variance_max);
  const double l_lo = std::log10(grid.lengthscale_min), l_hi = std::log10(grid.lengthscale_max);

  if (Y.maxCoeff() - Y.minCoeff() < 1e-12) {
    log_warning("constant training targets: returning the smallest grid signal variance");
    HyperSearchResult r;
    r.best = {grid.signal_variance_min, grid.lengthscale_max};
    return r;
  }

  Eigen::MatrixXd Xs = X;
  Eigen::VectorXd Ys = Y;
  if (grid.max_points > 0 && static_cast<std::size_t>(X.rows()) > grid.max_points) {
    const auto m = static_cast<Eigen::Index>(grid.max_points);
    Xs.resize(m, X.cols());
    Ys.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index src = r * X.rows() / m;
      Xs.row(r) = X.row(src);
      Ys[r] = Y[src];
    }
  }

  auto candidates_for = [](const std::vector<double>& se, const std::vector<double>& le) {
    std::vector<SeKernelParams> c;
    for (double s : se)
      for (double l : le) c.push_back({std::pow(10.0, s), std::pow(10.0, l)});
    return c;
  };

  const int cppd = grid.coarse_points_per_decade;
  auto coarse = search_hyperparameters(
      Xs, Ys, lambda, candidates_for(lattice(s_lo, s_hi, cppd, s_lo, s_hi), lattice(l_lo, l_hi, cppd, l_lo, l_hi)));
  const double step = 1.0 / cppd;
  const double bs = std::log10(coarse.best.signal_variance), bl = std::log10(coarse.best.lengthscale);
  const int ppd = grid.points_per_decade;
  auto fine = search_hyperparameters(Xs, Ys, lambda,
                                     candidates_for(lattice(s_lo, s_hi, ppd, bs - step, bs + step),
                                                    lattice(l_lo, l_hi, ppd, bl - step, bl + step)));

  HyperSearchResult result;
  result.evaluated = std::move(coarse.evaluated);
  result.evaluated.insert(result.evaluated.end(), fine.evaluated.begin(), fine.evaluated.end());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : result.evaluated)
    if (c.log_likelihood > best) {
      best = c.log_likelihood;
      result.best = c.params;
    }
  if (!std::isfinite(best)) throw NumericError("no hyperparameter candidate produced a factorizable kernel matrix");
  return result;
}

GpModel fit(const DataSet& data, ActionId a, Eigen::Index i, const SeKernelParams& params, double lambda) {
  if (a >= data.action_names.size()) throw ConfigError("action index out of range");
  if (i < 0 || i >= data.dimension) throw ConfigError("output dimension out of range");
  const Eigen::MatrixXd X = data.inputs(a);
  if (X.rows() == 0) throw ConfigError("no samples recorded for action '" + data.action_names[a] + "'");
  return fit<double>(X, data.targets(a, i), params, lambda, a, i);
}

HyperSearchResult optimize_hyperparameters(const DataSet& data, ActionId a, Eigen::Index i, double lambda,
                                           const HyperGrid& grid) {
  return optimize_hyperparameters(data.inputs(a), data.targets(a, i), lambda, grid);
}

void write_models(std::ostream& out, const ModelSet& set) {
  using text::format_double;
  out << "gpimdp-models 1\n";
  out << "actions";
  for (const auto& a : set.action_names) out << ' ' << a;
  out << "\ndimension " << set.dimension << "\nmodels " << set.models.size() << '\n';
  for (const auto& m : set.models) {
    out << "model " << m.action << ' ' << m.output_dim << ' ' << m.size() << '\n';
    out << "kernel " << format_double(m.kernel.signal_variance) << ' ' << format_double(m.kernel.lengthscale)
        << '\n';
    out << "lambda " << format_double(m.lambda) << ' ' << format_double(m.jitter) << '\n';
    for (Eigen::Index r = 0; r < m.size(); ++r) {
      for (Eigen::Index c = 0; c < m.input_dim(); ++c) out << format_double(m.inputs(r, c)) << ' ';
      out << format_double(m.targets[r]) << ' ' << format_double(m.weights[r]) << '\n';
    }
    for (Eigen::Index r = 0; r < m.size(); ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) out << (c ? " " : "") << format_double(m.solve_factor(r, c));
      out << '\n';
    }
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      auto t = text::tokens(line);
      if (!t.empty()) return t;
    }
    throw ParseError("unexpected end of file", lineno_);
  }

  std::vector<std::string> expect(const std::string& keyword, std::size_t count) {
    auto t = next();
    if (t.front() != keyword || (count && t.size() != count))
      throw ParseError("expected '" + keyword + "' line", lineno_);
    return t;
  }

  double number(const std::string& s) const {
    try {
      return text::parse_double(s);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno_);
    }
  }

  long long integer(const std::string& s) const {
    try {
      return text::parse_int(s);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno_);
    }
  }

  std::size_t line() const { return lineno_; }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace

ModelSet read_models(std::istream& in) {
  LineReader reader(in);
  const auto magic = reader.next();
  if (magic.size() != 2 || magic[0] != "gpimdp-models") throw ParseError("missing 'gpimdp-models' header", 1);
  if (magic[1] != "1") throw ParseError("unsupported model format version " + magic[1], 1);
  ModelSet set;
  auto actions = reader.expect("actions", 0);
  set.action_names.assign(actions.begin() + 1, actions.end());
  set.dimension = reader.integer(reader.expect("dimension", 2)[1]);
  const auto count = reader.integer(reader.expect("models", 2)[1]);
  if (count < 0) throw ParseError("negative model count", reader.line());
  for (long long k = 0; k < count; ++k) {
    const auto head = reader.expect("model", 4);
    GpModel m;
    m.action = static_cast<std::size_t>(reader.integer(head[1]));
    m.output_dim = reader.integer(head[2]);
    const auto n = reader.integer(head[3]);
    if (m.action >= set.action_names.size() || m.output_dim < 0 || m.output_dim >= set.dimension || n < 1)
      throw ParseError("model header out of range", reader.line());
    const auto kern = reader.expect("kernel", 3);
    m.kernel = {reader.number(kern[1]), reader.number(kern[2])};
    const auto lam = reader.expect("lambda", 3);
    m.lambda = reader.number(lam[1]);
    m.jitter = reader.number(lam[2]);
    m.inputs.resize(n, set.dimension);
    m.targets.resize(n);
    m.weights.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto row = reader.next();
      if (static_cast<Eigen::Index>(row.size()) != set.dimension + 2)
        throw ParseError("training row has " + std::to_string(row.size()) + " fields", reader.line());
      for (Eigen::Index c = 0; c < set.dimension; ++c) m.inputs(r, c) = reader.number(row[c]);
      m.targets[r] = reader.number(row[set.dimension]);
      m.weights[r] = reader.number(row[set.dimension + 1]);
    }
    m.solve_factor = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto row = reader.next();
      if (static_cast<Eigen::Index>(row.size()) != r + 1)
        throw ParseError("factor row " + std::to_string(r) + " has wrong length", reader.line());
      for (Eigen::Index c = 0; c <= r; ++c) m.solve_factor(r, c) = reader.number(row[c]);
    }
    if (!m.kernel.valid() || !(m.lambda > 0)) throw ParseError("invalid kernel parameters", reader.line());
    set.models.push_back(std::move(m));
  }
  // models must be stored in (action, dimension) order so ModelSet::at works
  for (std::size_t k = 0; k < set.models.size(); ++k) {
    const auto expect_a = k / static_cast<std::size_t>(set.dimension);
    const auto expect_i = static_cast<Eigen::Index>(k % static_cast<std::size_t>(set.dimension));
    if (set.models[k].action != expect_a || set.models[k].output_dim != expect_i)
      throw ParseError("models are not stored in (action, dimension) order");
  }
  return set;
}

}  // namespace gpv
