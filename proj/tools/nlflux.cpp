// Command-line runner for the nonlocal sparse-flux experiments.
//
//   nlflux <subcommand> [--config file.json] [--out dir] [--seed n] [flags]
//
// Flags fill the configuration first; a --config file is applied on top of
// them, so its fields take precedence.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlflux/experiment.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> dim;
  std::optional<int> grid;
  std::optional<double> delta;
  std::optional<std::string> kernel;
  std::optional<double> source;
  std::optional<std::string> antisym;
  std::optional<int> trials;
  std::optional<int> max_iters;
  std::optional<double> tol_gap;
  std::optional<double> tol_primal;
  std::optional<double> step_ratio;
  std::optional<double> over_relaxation;
  std::optional<int> check_every;
  std::optional<double> gamma;
  std::optional<double> kappa_bar;
  std::vector<double> betas;
  std::vector<double> gammas;
  std::vector<double> deltas;
};

void add_flags(CLI::App* sub, Flags& f, const std::string& name) {
  sub->add_option("--config", f.config, "JSON experiment configuration; its fields override flags");
  sub->add_option("--out", f.out, "output directory for report.json and results.csv");
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--dim", f.dim, "space dimension (1 or 2)");
  sub->add_option("--grid", f.grid, "cells per side (largest N for dualnorm-example)");
  sub->add_option("--delta", f.delta, "interaction horizon");
  sub->add_option("--kernel", f.kernel, "CONSTANT or FULL_INTERACTION");
  sub->add_option("--source", f.source, "constant source value");
  sub->add_option("--max-iters", f.max_iters, "iteration cap");
  sub->add_option("--tol-gap", f.tol_gap, "relative duality gap tolerance");
  sub->add_option("--tol-primal", f.tol_primal, "relative constraint residual tolerance");
  sub->add_option("--step-ratio", f.step_ratio, "dual/primal step split");
  sub->add_option("--over-relaxation", f.over_relaxation, "extrapolation parameter in [0, 1]");
  sub->add_option("--check-every", f.check_every, "iterations between certificate evaluations");
  if (name == "adjoint-check") {
    sub->add_option("--trials", f.trials, "number of random trials");
  }
  if (name == "solve-bp" || name == "dualnorm-example") {
    sub->add_option("--antisym", f.antisym, "on, off or both");
  }
  if (name == "sweep-beta") {
    sub->add_option("--betas", f.betas, "Tikhonov weights")->delimiter(',');
  }
  if (name == "sweep-gamma") {
    sub->add_option("--gammas", f.gammas, "budget parameters")->delimiter(',');
  }
  if (name == "sweep-gamma" || name == "design-gamma") {
    sub->add_option("--kappa-bar", f.kappa_bar, "conductivity cap scale");
  }
  if (name == "design-gamma") {
    sub->add_option("--gamma", f.gamma, "budget parameter");
  }
  if (name == "sweep-delta") {
    sub->add_option("--deltas", f.deltas, "decreasing horizons")->delimiter(',');
  }
}

std::string describe(const std::string& name) {
  if (name == "adjoint-check") return "check <Dq, v> = -<q, Gv> on random fields";
  if (name == "solve-bp") return "mixed-norm basis pursuit, with or without antisymmetry";
  if (name == "solve-dual") return "dual temperature problem";
  if (name == "sweep-beta") return "Tikhonov values over a list of beta";
  if (name == "sweep-gamma") return "design problem over a list of gamma";
  if (name == "sweep-delta") return "free and antisymmetric values as the horizon shrinks";
  if (name == "dualnorm-example") return "free versus antisymmetric dual norm of a sine pair field";
  if (name == "design-gamma") return "design problem at one gamma, writes conductivity.csv";
  return "";
}

nlflux::ExperimentConfig resolve(const Flags& f) {
  nlflux::ExperimentConfig c;
  if (f.out) c.output_dir = *f.out;
  if (f.seed) c.solver.seed = *f.seed;
  if (f.dim) c.dimension = *f.dim;
  if (f.grid) c.cells_per_side = *f.grid;
  if (f.delta) c.delta = *f.delta;
  if (f.kernel) c.kernel_profile = nlflux::detail::upper(*f.kernel);
  if (f.source) c.source.value = *f.source;
  if (f.antisym) c.antisym = *f.antisym;
  if (f.trials) c.trials = *f.trials;
  if (f.max_iters) c.solver.max_iters = *f.max_iters;
  if (f.tol_gap) c.solver.tol_gap = *f.tol_gap;
  if (f.tol_primal) c.solver.tol_primal = *f.tol_primal;
  if (f.step_ratio) c.solver.step_ratio = *f.step_ratio;
  if (f.over_relaxation) c.solver.over_relaxation = *f.over_relaxation;
  if (f.check_every) c.solver.check_every = *f.check_every;
  if (f.gamma || f.kappa_bar) {
    nlflux::BudgetSpec b;
    if (f.gamma) b.gamma = *f.gamma;
    if (f.kappa_bar) b.kappa_bar = *f.kappa_bar;
    c.budget = b;
  }
  if (!f.betas.empty()) c.betas = f.betas;
  if (!f.gammas.empty()) c.gammas = f.gammas;
  if (!f.deltas.empty()) c.deltas = f.deltas;
  if (f.config) {
    nlflux::apply_json(c, nlflux::read_json_file(*f.config));
  }
  return c;
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal sparse-flux optimization experiments"};
  app.require_subcommand(1);
  Flags flags;
  for (const std::string& name : nlflux::subcommands()) {
    add_flags(app.add_subcommand(name, describe(name)), flags, name);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "nlflux: " << one_line(e.what()) << "\n";
    return nlflux::kExitConfiguration;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const nlflux::ExperimentConfig config = resolve(flags);
    const nlflux::RunResult result = nlflux::run_experiment(name, config);
    nlflux::write_artifacts(result, config.output_dir);
    if (!result.summary.empty()) {
      std::cout << result.summary << "\n";
    }
    std::cout << result.csv;
    for (const auto& d : result.diagnostics) {
      std::cerr << "nlflux " << name << ": " << one_line(d) << "\n";
    }
    return result.exit_code;
  } catch (const std::invalid_argument& e) {
    // ConfigurationError and ArgumentError.
    std::cerr << "nlflux " << name << ": configuration error: " << one_line(e.what()) << "\n";
    return nlflux::kExitConfiguration;
  } catch (const std::exception& e) {
    std::cerr << "nlflux " << name << ": " << one_line(e.what()) << "\n";
    return nlflux::kExitNotConverged;
  }
}
