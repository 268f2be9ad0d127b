#pragma once

// Experiment configuration (JSON) and the subcommand runners behind the
// command-line tool. Each runner returns the report document, the CSV table
// and any extra CSV files; writing them to disk is left to the caller.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nlflux/calculus.hpp"
#include "nlflux/design.hpp"
#include "nlflux/error.hpp"
#include "nlflux/fields.hpp"
#include "nlflux/geometry.hpp"
#include "nlflux/mixed_norms.hpp"
#include "nlflux/solvers.hpp"

namespace nlflux {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfiguration = 2,
  kExitNotConverged = 3,
  kExitCertificate = 4,
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "adjoint-check", "solve-bp",    "solve-dual",       "sweep-beta",
      "sweep-gamma",   "sweep-delta", "dualnorm-example", "design-gamma"};
  return names;
}

struct SourceSpec {
  std::string type = "CONSTANT";  // CONSTANT | CELL_VALUES
  double value = 1.0;
  std::vector<double> cell_values;
};

struct BudgetSpec {
  double gamma = 0.02;
  double kappa_bar = 1.0;
};

struct ExperimentConfig {
  int dimension = 1;
  int cells_per_side = 16;
  double delta = 0.25;
  std::string kernel_profile = "CONSTANT";  // CONSTANT | FULL_INTERACTION
  SourceSpec source;
  std::optional<BudgetSpec> budget;
  SolverConfig solver;
  std::string output_dir = "out";
  std::string antisym = "both";  // on | off | both
  int trials = 100;
  std::vector<double> betas = {1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<double> gammas = {0.5, 0.1, 0.02};
  std::vector<double> deltas = {0.2, 0.1, 0.05};
};

namespace detail {

inline std::string upper(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return s;
}

inline void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigurationError(where + ": expected a JSON object");
  }
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigurationError(where + ": unknown field '" + item.key() + "'");
    }
  }
}

template <class T>
void read_field(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) {
    return;
  }
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigurationError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline json to_json(const SolverConfig& s) {
  return json{{"max_iters", s.max_iters},       {"tol_primal", s.tol_primal},
              {"tol_gap", s.tol_gap},           {"step_ratio", s.step_ratio},
              {"over_relaxation", s.over_relaxation}, {"seed", s.seed},
              {"check_every", s.check_every}};
}

inline json to_json(const ExperimentConfig& c) {
  json source{{"type", c.source.type}};
  if (c.source.type == "CELL_VALUES") {
    source["payload"] = c.source.cell_values;
  } else {
    source["payload"] = c.source.value;
  }
  json out{{"dimension", c.dimension},
           {"cells_per_side", c.cells_per_side},
           {"delta", c.delta},
           {"kernel_profile", c.kernel_profile},
           {"source", source}};
  if (c.budget) {
    out["budget"] = json{{"gamma", c.budget->gamma}, {"kappa_bar", c.budget->kappa_bar}};
  } else {
    out["budget"] = nullptr;
  }
  out["solver"] = to_json(c.solver);
  out["output_dir"] = c.output_dir;
  out["antisym"] = c.antisym;
  out["trials"] = c.trials;
  out["betas"] = c.betas;
  out["gammas"] = c.gammas;
  out["deltas"] = c.deltas;
  return out;
}

/// Overlays the fields present in j onto c. Unknown fields and wrong types
/// are configuration errors.
inline void apply_json(ExperimentConfig& c, const json& j) {
  detail::reject_unknown(j,
                         {"dimension", "cells_per_side", "delta", "kernel_profile", "source", "budget",
                          "solver", "output_dir", "antisym", "trials", "betas", "gammas", "deltas"},
                         "config");
  detail::read_field(j, "dimension", c.dimension, "config");
  detail::read_field(j, "cells_per_side", c.cells_per_side, "config");
  detail::read_field(j, "delta", c.delta, "config");
  detail::read_field(j, "kernel_profile", c.kernel_profile, "config");
  detail::read_field(j, "output_dir", c.output_dir, "config");
  detail::read_field(j, "antisym", c.antisym, "config");
  detail::read_field(j, "trials", c.trials, "config");
  detail::read_field(j, "betas", c.betas, "config");
  detail::read_field(j, "gammas", c.gammas, "config");
  detail::read_field(j, "deltas", c.deltas, "config");
  c.kernel_profile = detail::upper(c.kernel_profile);
  if (j.contains("source")) {
    const json& s = j.at("source");
    detail::reject_unknown(s, {"type", "payload"}, "config.source");
    detail::read_field(s, "type", c.source.type, "config.source");
    c.source.type = detail::upper(c.source.type);
    if (s.contains("payload")) {
      if (c.source.type == "CELL_VALUES") {
        detail::read_field(s, "payload", c.source.cell_values, "config.source");
      } else {
        detail::read_field(s, "payload", c.source.value, "config.source");
      }
    }
  }
  if (j.contains("budget")) {
    const json& b = j.at("budget");
    if (b.is_null()) {
      c.budget.reset();
    } else {
      detail::reject_unknown(b, {"gamma", "kappa_bar"}, "config.budget");
      BudgetSpec spec = c.budget.value_or(BudgetSpec{});
      detail::read_field(b, "gamma", spec.gamma, "config.budget");
      detail::read_field(b, "kappa_bar", spec.kappa_bar, "config.budget");
      c.budget = spec;
    }
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::reject_unknown(s,
                           {"max_iters", "tol_primal", "tol_gap", "step_ratio", "over_relaxation", "seed",
                            "check_every"},
                           "config.solver");
    detail::read_field(s, "max_iters", c.solver.max_iters, "config.solver");
    detail::read_field(s, "tol_primal", c.solver.tol_primal, "config.solver");
    detail::read_field(s, "tol_gap", c.solver.tol_gap, "config.solver");
    detail::read_field(s, "step_ratio", c.solver.step_ratio, "config.solver");
    detail::read_field(s, "over_relaxation", c.solver.over_relaxation, "config.solver");
    detail::read_field(s, "seed", c.solver.seed, "config.solver");
    detail::read_field(s, "check_every", c.solver.check_every, "config.solver");
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigurationError("cannot open config file '" + path + "'");
  }
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Checks everything the named subcommand needs before any allocation.
inline void validate(const ExperimentConfig& c, const std::string& subcommand) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end()) {
    throw ConfigurationError("unknown subcommand '" + subcommand + "'");
  }
  if (c.dimension != 1 && c.dimension != 2) {
    throw ConfigurationError("dimension must be 1 or 2");
  }
  if (c.cells_per_side < 2) {
    throw ConfigurationError("cells_per_side must be at least 2");
  }
  if (c.kernel_profile != "CONSTANT" && c.kernel_profile != "FULL_INTERACTION") {
    throw ConfigurationError("kernel_profile must be CONSTANT or FULL_INTERACTION");
  }
  const bool needs_delta = subcommand != "dualnorm-example" && subcommand != "sweep-delta" &&
                           c.kernel_profile == "CONSTANT";
  if (needs_delta && !(c.delta > 0.0 && c.delta < 1.0)) {
    throw ConfigurationError("delta must lie in (0, 1)");
  }
  if (c.source.type != "CONSTANT" && c.source.type != "CELL_VALUES") {
    throw ConfigurationError("source.type must be CONSTANT or CELL_VALUES");
  }
  if (c.source.type == "CELL_VALUES") {
    std::size_t expected = 1;
    for (int d = 0; d < c.dimension; ++d) {
      expected *= static_cast<std::size_t>(c.cells_per_side);
    }
    if (c.source.cell_values.size() != expected) {
      throw ConfigurationError("source payload must hold " + std::to_string(expected) + " cell values");
    }
    for (double v : c.source.cell_values) {
      if (!std::isfinite(v)) {
        throw ConfigurationError("source payload has a non-finite value");
      }
    }
  } else if (!std::isfinite(c.source.value)) {
    throw ConfigurationError("source payload must be finite");
  }
  if (c.antisym != "on" && c.antisym != "off" && c.antisym != "both") {
    throw ConfigurationError("antisym must be on, off or both");
  }
  validate(c.solver);
  if (c.trials < 1) {
    throw ConfigurationError("trials must be at least 1");
  }
  auto positive_list = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) {
      throw ConfigurationError(std::string(name) + " must not be empty");
    }
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw ConfigurationError(std::string(name) + " entries must be positive and finite");
      }
    }
  };
  if (subcommand == "sweep-beta") {
    positive_list(c.betas, "betas");
  }
  if (subcommand == "sweep-gamma") {
    positive_list(c.gammas, "gammas");
  }
  if (subcommand == "sweep-gamma" || subcommand == "design-gamma") {
    const BudgetSpec b = c.budget.value_or(BudgetSpec{});
    if (!(b.kappa_bar > 0.0) || !std::isfinite(b.kappa_bar)) {
      throw ConfigurationError("budget.kappa_bar must be positive");
    }
    if (subcommand == "design-gamma" && (!(b.gamma > 0.0) || !std::isfinite(b.gamma))) {
      throw ConfigurationError("budget.gamma must be positive");
    }
  }
  if (subcommand == "sweep-delta") {
    positive_list(c.deltas, "deltas");
    for (std::size_t k = 0; k < c.deltas.size(); ++k) {
      if (!(c.deltas[k] < 1.0) || !(c.deltas[k] > 1.0 / c.cells_per_side)) {
        throw ConfigurationError("deltas must lie in (h, 1)");
      }
      if (k > 0 && !(c.deltas[k] < c.deltas[k - 1])) {
        throw ConfigurationError("deltas must be strictly decreasing");
      }
    }
    if (c.kernel_profile != "CONSTANT") {
      throw ConfigurationError("sweep-delta needs the CONSTANT kernel profile");
    }
  }
  if (subcommand == "dualnorm-example" && c.dimension != 1) {
    throw ConfigurationError("dualnorm-example is defined in one dimension");
  }
  const bool solves_bp = subcommand != "adjoint-check" && subcommand != "dualnorm-example";
  if (solves_bp && c.kernel_profile == "FULL_INTERACTION") {
    throw ConfigurationError(subcommand + " needs the CONSTANT kernel profile");
  }
}

/// Minimal RFC-4180 table of numeric cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k > 0) {
          out += ',';
        }
        out += cells[k];
      }
      out += '\n';
    };
    if (!header_.empty()) {
      line(header_);
    }
    for (const auto& r : rows_) {
      line(r);
    }
    return out;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double x) { return format_real(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "true" : "false"; }

inline json to_json(const SolveReport& r) {
  json history = json::array();
  for (const auto& s : r.history) {
    history.push_back(json{{"iteration", s.iteration}, {"primal", s.primal}, {"dual", s.dual},
                           {"residual", s.residual}});
  }
  json breakdown = json::object();
  for (const auto& [k, v] : r.breakdown) {
    breakdown[k] = v;
  }
  return json{{"optimal_value", r.optimal_value}, {"dual_value", r.dual_value},
              {"gap", r.gap},                     {"primal_residual", r.primal_residual},
              {"iterations", r.iterations},       {"converged", r.converged},
              {"breakdown", breakdown},           {"history", history}};
}

struct RunResult {
  int exit_code = kExitOk;
  json report;
  std::string csv;
  /// Extra CSV artifacts, file name to content.
  std::map<std::string, std::string> files;
  std::vector<std::string> diagnostics;
  std::string summary;
};

namespace detail {

struct Problem {
  std::shared_ptr<const Grid> grid;
  Kernel kernel;
  ScalarField source;
};

inline Problem make_problem(const ExperimentConfig& c) {
  Problem p;
  if (c.kernel_profile == "FULL_INTERACTION") {
    p.grid = std::make_shared<const Grid>(build_full_interaction_grid(c.dimension, c.cells_per_side));
    p.kernel = build_full_interaction_kernel(*p.grid);
  } else {
    p.grid = std::make_shared<const Grid>(build_grid(c.dimension, c.cells_per_side, c.delta));
    p.kernel = build_kernel(*p.grid, c.delta);
  }
  if (c.source.type == "CELL_VALUES") {
    p.source = ScalarField{Support::Omega, c.source.cell_values};
  } else {
    p.source = ScalarField::constant(*p.grid, Support::Omega, c.source.value);
  }
  return p;
}

/// Accumulates convergence and certificate outcomes into an exit code.
struct Verdict {
  bool converged = true;
  bool certified = true;
  std::vector<std::string> messages;

  void solve(const SolveReport& r, const std::string& label) {
    if (!r.converged) {
      converged = false;
      messages.push_back(label + " did not converge after " + std::to_string(r.iterations) +
                         " iterations (gap " + format_real(r.gap) + ", residual " +
                         format_real(r.primal_residual) + ")");
    }
  }
  void check(bool ok, const std::string& what) {
    if (!ok) {
      certified = false;
      messages.push_back("certificate violated: " + what);
    }
  }
  int code() const {
    if (!certified) {
      return kExitCertificate;
    }
    return converged ? kExitOk : kExitNotConverged;
  }
};

inline double slack(const SolverConfig& s, double value) {
  return 10.0 * s.tol_gap * std::max(1.0, std::abs(value));
}

inline std::string cell_field_csv(const Grid& grid, const ScalarField& field, const char* name) {
  std::vector<std::string> header = {"cell", "x"};
  if (grid.dimension == 2) {
    header.push_back("y");
  }
  header.push_back(name);
  CsvTable t(header);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const std::size_t c = field.support == Support::Omega ? grid.omega_cells[i] : i;
    std::vector<std::string> row = {std::to_string(i), cell(grid.centers[c][0])};
    if (grid.dimension == 2) {
      row.push_back(cell(grid.centers[c][1]));
    }
    row.push_back(cell(field.values[i]));
    t.add(row);
  }
  return t.str();
}

/// Dense N x N matrix of q(i, j) on a one-dimensional full-interaction grid.
inline std::string pair_matrix_csv(const TwoPointField& q) {
  const PairList& pairs = q.pairs();
  const std::size_t n = pairs.cell_count;
  std::vector<double> m(n * n, 0.0);
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const auto [a, b] = pairs.ends[e];
    m[a * n + b] = q.forward(e);
    m[b * n + a] = q.backward(e);
  }
  CsvTable t({});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < n; ++j) {
      row.push_back(cell(m[i * n + j]));
    }
    t.add(row);
  }
  return t.str();
}

inline void run_adjoint_check(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  Problem p = make_problem(c);
  const Grid& grid = *p.grid;
  std::mt19937_64 rng(c.solver.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < c.trials; ++t) {
    ScalarField u = ScalarField::zeros(grid, Support::Omega);
    for (double& x : u.values) {
      x = normal(rng);
    }
    TwoPointField q(p.kernel.pairs, SymmetryClass::General);
    for (double& x : q.data()) {
      x = normal(rng);
    }
    const TwoPointField gu = nonlocal_gradient(u, p.kernel);
    const double lhs = inner(nonlocal_divergence(q, p.kernel), u, grid);
    const double rhs = inner(q, gu);
    worst = std::max(worst, std::abs(lhs + rhs) / (norm_2(q) * norm_2(gu) + 1.0));
  }
  const double tolerance = 1e-12;
  CsvTable t({"trials", "max_residual", "tolerance"});
  t.add({cell(c.trials), cell(worst), cell(tolerance)});
  out.csv = t.str();
  out.report["max_residual"] = worst;
  out.report["tolerance"] = tolerance;
  out.summary = "max adjointness residual " + format_real(worst);
  v.check(worst <= tolerance, "adjointness residual " + format_real(worst) + " exceeds 1e-12");
}

inline void run_solve_bp(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  Problem p = make_problem(c);
  CsvTable t({"antisymmetric", "optimal_value", "dual_value", "gap", "primal_residual", "iterations",
              "converged"});
  json reports = json::array();
  std::optional<double> free_value;
  std::optional<double> anti_value;
  for (bool anti : {false, true}) {
    if ((anti && c.antisym == "off") || (!anti && c.antisym == "on")) {
      continue;
    }
    FluxSolution s = solve_basis_pursuit(p.source, p.kernel, anti, c.solver);
    const SolveReport& r = s.report;
    v.solve(r, anti ? "antisymmetric basis pursuit" : "basis pursuit");
    v.check(r.dual_value <= r.optimal_value + slack(c.solver, r.optimal_value),
            "weak duality in basis pursuit");
    t.add({cell(anti), cell(r.optimal_value), cell(r.dual_value), cell(r.gap), cell(r.primal_residual),
           cell(r.iterations), cell(r.converged)});
    json entry = to_json(r);
    entry["antisymmetric"] = anti;
    reports.push_back(entry);
    (anti ? anti_value : free_value) = r.optimal_value;
  }
  if (free_value && anti_value) {
    v.check(*anti_value >= *free_value - slack(c.solver, *free_value),
            "antisymmetric value below the free value");
  }
  out.csv = t.str();
  out.report["solves"] = reports;
}

inline void run_solve_dual(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  Problem p = make_problem(c);
  TemperatureSolution s = solve_dual_temperature(p.source, p.kernel, c.solver);
  const SolveReport& r = s.report;
  v.solve(r, "dual temperature problem");
  v.check(r.optimal_value <= r.dual_value + slack(c.solver, r.dual_value),
          "dual value above its flux-side bound");
  CsvTable t({"d_star", "upper_bound", "gap", "iterations", "converged"});
  t.add({cell(r.optimal_value), cell(r.dual_value), cell(r.gap), cell(r.iterations), cell(r.converged)});
  out.csv = t.str();
  out.report["solve"] = to_json(r);
  out.files["temperature.csv"] = cell_field_csv(*p.grid, s.temperature, "u");
}

inline void run_sweep_beta(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  Problem p = make_problem(c);
  FluxSolution anti = solve_basis_pursuit(p.source, p.kernel, true, c.solver);
  v.solve(anti.report, "antisymmetric basis pursuit");
  const double p_anti = anti.report.optimal_value;
  CsvTable t({"beta", "p_beta", "norm12", "half_beta_norm2sq", "gap"});
  json reports = json::array();
  std::optional<std::pair<double, double>> previous;
  for (double beta : c.betas) {
    FluxSolution s = solve_tikhonov(p.source, p.kernel, beta, c.solver);
    const SolveReport& r = s.report;
    v.solve(r, "Tikhonov beta=" + format_real(beta));
    const double n12 = norm_12(s.flux);
    const double quad = 0.5 * beta * inner(s.flux, s.flux);
    const double eps = slack(c.solver, r.optimal_value);
    v.check(p_anti <= n12 + eps && n12 <= r.optimal_value + eps,
            "sandwich p_a <= norm12 <= p_beta at beta=" + format_real(beta));
    if (previous && beta < previous->first) {
      v.check(r.optimal_value <= previous->second + eps,
              "p_beta increased as beta decreased to " + format_real(beta));
    }
    previous = {beta, r.optimal_value};
    t.add({cell(beta), cell(r.optimal_value), cell(n12), cell(quad), cell(r.gap)});
    json entry = to_json(r);
    entry["beta"] = beta;
    reports.push_back(entry);
  }
  out.csv = t.str();
  out.report["antisymmetric_basis_pursuit"] = to_json(anti.report);
  out.report["solves"] = reports;
}

inline void run_sweep_gamma(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  Problem p = make_problem(c);
  const double kappa_bar = c.budget.value_or(BudgetSpec{}).kappa_bar;
  FluxSolution anti = solve_basis_pursuit(p.source, p.kernel, true, c.solver);
  v.solve(anti.report, "antisymmetric basis pursuit");
  const double volume = p.grid->omega_delta_volume();
  const double limit = anti.report.optimal_value * anti.report.optimal_value / (2.0 * volume);
  CsvTable t({"gamma", "p_hat", "lower_cert", "upper_cert"});
  json reports = json::array();
  for (double gamma : c.gammas) {
    DesignSolution s = solve_design_gamma(p.source, p.kernel, DesignBudget::for_grid(*p.grid, gamma, kappa_bar),
                                          c.solver);
    const SolveReport& r = s.report;
    v.solve(r, "design gamma=" + format_real(gamma));
    const double lo = r.breakdown.at("lower_cert");
    const double up = r.breakdown.at("upper_cert");
    const double eps = slack(c.solver, r.optimal_value);
    v.check(lo <= r.optimal_value + eps && r.optimal_value <= up + eps,
            "design sandwich at gamma=" + format_real(gamma));
    t.add({cell(gamma), cell(r.optimal_value), cell(lo), cell(up)});
    json entry = to_json(r);
    entry["gamma"] = gamma;
    reports.push_back(entry);
  }
  out.csv = t.str();
  out.report["limit_value"] = limit;
  out.report["antisymmetric_basis_pursuit"] = to_json(anti.report);
  out.report["solves"] = reports;
}

inline void run_design_gamma(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  Problem p = make_problem(c);
  const BudgetSpec b = c.budget.value_or(BudgetSpec{});
  DesignSolution s = solve_design_gamma(p.source, p.kernel, DesignBudget::for_grid(*p.grid, b.gamma, b.kappa_bar),
                                        c.solver);
  const SolveReport& r = s.report;
  v.solve(r, "design problem");
  const double lo = r.breakdown.at("lower_cert");
  const double up = r.breakdown.at("upper_cert");
  const double eps = slack(c.solver, r.optimal_value);
  v.check(lo <= r.optimal_value + eps && r.optimal_value <= up + eps, "design sandwich");
  CsvTable t({"gamma", "p_hat", "lower_cert", "upper_cert", "iterations", "converged"});
  t.add({cell(b.gamma), cell(r.optimal_value), cell(lo), cell(up), cell(r.iterations), cell(r.converged)});
  out.csv = t.str();
  out.report["solve"] = to_json(r);
  out.files["conductivity.csv"] = cell_field_csv(*p.grid, s.conductivity, "kappa");
}

inline void run_sweep_delta(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  const Grid probe = build_grid(c.dimension, c.cells_per_side, c.deltas.front());
  const ScalarField f = c.source.type == "CELL_VALUES"
                            ? ScalarField{Support::Omega, c.source.cell_values}
                            : ScalarField::constant(probe, Support::Omega, c.source.value);
  std::vector<DeltaSweepRow> rows = delta_sweep(f, c.dimension, c.cells_per_side, c.deltas, c.solver);
  CsvTable t({"delta", "d_star", "p_star_antisym", "local_ref"});
  json reports = json::array();
  std::optional<double> previous_distance;
  for (const auto& row : rows) {
    v.solve(row.dual_report, "free problem at delta=" + format_real(row.delta));
    v.solve(row.antisym_report, "antisymmetric problem at delta=" + format_real(row.delta));
    v.check(row.p_star_antisym >= row.d_star - slack(c.solver, row.d_star),
            "p_a below d* at delta=" + format_real(row.delta));
    if (c.dimension == 1) {
      const double distance = std::abs(row.d_star - row.local_ref);
      if (previous_distance) {
        v.check(distance <= *previous_distance,
                "d* moved away from the local reference at delta=" + format_real(row.delta));
      }
      previous_distance = distance;
    }
    t.add({cell(row.delta), cell(row.d_star), cell(row.p_star_antisym), cell(row.local_ref)});
    reports.push_back(json{{"delta", row.delta},
                           {"free", to_json(row.dual_report)},
                           {"antisymmetric", to_json(row.antisym_report)}});
  }
  out.csv = t.str();
  out.report["rows"] = reports;
}

inline std::vector<int> dualnorm_resolutions(int largest) {
  std::vector<int> ns;
  for (int n = std::min(8, largest); n < largest; n *= 2) {
    ns.push_back(n);
  }
  ns.push_back(largest);
  return ns;
}

/// p(x, x') = -sin(pi x) + sin(pi x') on the full-interaction pair list.
inline TwoPointField sine_pair_field(const Grid& grid, const Kernel& kernel) {
  const double pi = std::acos(-1.0);
  return TwoPointField::from_function(kernel.pairs, SymmetryClass::General, [&](std::size_t a, std::size_t b) {
    return -std::sin(pi * grid.centers[a][0]) + std::sin(pi * grid.centers[b][0]);
  });
}

inline void run_dualnorm_example(const ExperimentConfig& c, RunResult& out, Verdict& v) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool want_free = c.antisym != "on";
  const bool want_anti = c.antisym != "off";
  CsvTable t({"N", "free_value", "antisym_value", "gap", "iters_antisym"});
  json rows = json::array();
  const std::vector<int> ns = dualnorm_resolutions(c.cells_per_side);
  for (int n : ns) {
    const Grid grid = build_full_interaction_grid(1, n);
    const Kernel kernel = build_full_interaction_kernel(grid);
    const TwoPointField p = sine_pair_field(grid, kernel);
    const double free_value = want_free ? dual_norm_free(p) : nan;
    double anti_value = nan;
    int iters = 0;
    json row{{"N", n}, {"free_value", free_value}};
    if (want_anti) {
      DualNormResult r = dual_norm_antisym(p, c.solver);
      anti_value = r.value;
      iters = r.iterations;
      if (!r.converged) {
        v.converged = false;
        v.messages.push_back("antisymmetric dual norm at N=" + std::to_string(n) + " did not converge");
      }
      v.check(r.value <= norm_inf2(p) + slack(c.solver, r.value),
              "antisymmetric dual norm above the free one at N=" + std::to_string(n));
      row["antisym_value"] = r.value;
      row["quotient_upper"] = r.upper_bound;
      row["quotient_lower"] = r.lower_bound;
      row["iterations"] = r.iterations;
      row["ascent_iterations"] = r.ascent_iterations;
      if (n == ns.back()) {
        out.files["maximizer_antisym.csv"] = pair_matrix_csv(r.maximizer);
      }
    }
    if (want_free && n == ns.back()) {
      out.files["maximizer_free.csv"] = pair_matrix_csv(dual_norm_free_maximizer(p));
    }
    const double gap = free_value - anti_value;
    t.add({cell(n), cell(free_value), cell(anti_value), cell(gap), cell(iters)});
    rows.push_back(row);
  }
  out.csv = t.str();
  out.report["rows"] = rows;
  out.report["analytic_free_limit"] = std::sqrt(0.5);
}

}  // namespace detail

/// Runs one subcommand. Configuration problems throw ConfigurationError or
/// ArgumentError; everything else is folded into the exit code.
inline RunResult run_experiment(const std::string& subcommand, const ExperimentConfig& config) {
  validate(config, subcommand);
  RunResult out;
  out.report = json{{"subcommand", subcommand}, {"config", to_json(config)}};
  detail::Verdict verdict;
  try {
    if (subcommand == "adjoint-check") {
      detail::run_adjoint_check(config, out, verdict);
    } else if (subcommand == "solve-bp") {
      detail::run_solve_bp(config, out, verdict);
    } else if (subcommand == "solve-dual") {
      detail::run_solve_dual(config, out, verdict);
    } else if (subcommand == "sweep-beta") {
      detail::run_sweep_beta(config, out, verdict);
    } else if (subcommand == "sweep-gamma") {
      detail::run_sweep_gamma(config, out, verdict);
    } else if (subcommand == "sweep-delta") {
      detail::run_sweep_delta(config, out, verdict);
    } else if (subcommand == "dualnorm-example") {
      detail::run_dualnorm_example(config, out, verdict);
    } else if (subcommand == "design-gamma") {
      detail::run_design_gamma(config, out, verdict);
    }
  } catch (const CertificateError& e) {
    verdict.certified = false;
    verdict.messages.push_back(e.what());
  } catch (const NumericalError& e) {
    verdict.converged = false;
    verdict.messages.push_back(e.what());
  }
  out.exit_code = verdict.code();
  out.diagnostics = verdict.messages;
  out.report["exit_code"] = out.exit_code;
  out.report["diagnostics"] = verdict.messages;
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw ConfigurationError("cannot write '" + path.string() + "'");
  }
  f << text;
}

/// Writes report.json, results.csv and any extra CSV files into dir.
inline void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigurationError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  write_text(dir / "report.json", r.report.dump(2) + "\n");
  write_text(dir / "results.csv", r.csv);
  for (const auto& [name, text] : r.files) {
    write_text(dir / name, text);
  }
}

}  // namespace nlflux
