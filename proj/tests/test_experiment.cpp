#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlflux/experiment.hpp"
#include "support.hpp"

using namespace nlflux;

namespace {

std::string first_line(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

ExperimentConfig small() {
  ExperimentConfig c;
  c.cells_per_side = 8;
  c.delta = 0.3;
  c.trials = 10;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, RejectsUnknownFields) {
  ExperimentConfig c;
  EXPECT_THROW(apply_json(c, json{{"dimenson", 2}}), ConfigurationError);
  EXPECT_THROW(apply_json(c, json{{"solver", {{"tolerance", 1e-3}}}}), ConfigurationError);
  EXPECT_THROW(apply_json(c, json{{"source", {{"kind", "CONSTANT"}}}}), ConfigurationError);
  EXPECT_THROW(apply_json(c, json{{"delta", "wide"}}), ConfigurationError);
  EXPECT_THROW(apply_json(c, json::array()), ConfigurationError);
}

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  c.dimension = 2;
  c.cells_per_side = 6;
  c.delta = 0.4;
  c.source.type = "CELL_VALUES";
  c.source.cell_values.assign(36, 0.5);
  c.budget = BudgetSpec{0.1, 2.0};
  c.solver.seed = 42;
  c.solver.tol_gap = 1e-6;
  c.betas = {0.5, 0.05};
  ExperimentConfig d;
  apply_json(d, to_json(c));
  EXPECT_EQ(to_json(d).dump(), to_json(c).dump());
  EXPECT_NO_THROW(validate(d, "solve-bp"));
}

TEST(Config, CaseInsensitiveEnums) {
  ExperimentConfig c;
  apply_json(c, json{{"kernel_profile", "full_interaction"}, {"source", {{"type", "constant"}, {"payload", 2.0}}}});
  EXPECT_EQ(c.kernel_profile, "FULL_INTERACTION");
  EXPECT_EQ(c.source.type, "CONSTANT");
  EXPECT_DOUBLE_EQ(c.source.value, 2.0);
}

TEST(Config, Validation) {
  ExperimentConfig c = small();
  EXPECT_NO_THROW(validate(c, "adjoint-check"));
  EXPECT_THROW(validate(c, "solve-everything"), ConfigurationError);
  c.dimension = 3;
  EXPECT_THROW(validate(c, "solve-bp"), ConfigurationError);
  c = small();
  c.source.type = "CELL_VALUES";
  c.source.cell_values.assign(7, 1.0);
  EXPECT_THROW(validate(c, "solve-bp"), ConfigurationError);
  c = small();
  c.kernel_profile = "FULL_INTERACTION";
  EXPECT_THROW(validate(c, "solve-bp"), ConfigurationError);
  EXPECT_NO_THROW(validate(c, "adjoint-check"));
  c = small();
  c.deltas = {0.2, 0.3};
  EXPECT_THROW(validate(c, "sweep-delta"), ConfigurationError);
  c = small();
  c.budget = BudgetSpec{0.0, 1.0};
  EXPECT_THROW(validate(c, "design-gamma"), ConfigurationError);
  c = small();
  c.antisym = "maybe";
  EXPECT_THROW(validate(c, "solve-bp"), ConfigurationError);
}

TEST(Runner, FrozenHeaders) {
  ExperimentConfig c = small();
  c.cells_per_side = 16;
  c.delta = 0.25;
  EXPECT_EQ(first_line(run_experiment("sweep-beta", c).csv), "beta,p_beta,norm12,half_beta_norm2sq,gap");
  EXPECT_EQ(first_line(run_experiment("sweep-gamma", c).csv), "gamma,p_hat,lower_cert,upper_cert");
  ExperimentConfig dn = small();
  dn.kernel_profile = "FULL_INTERACTION";
  EXPECT_EQ(first_line(run_experiment("dualnorm-example", dn).csv), "N,free_value,antisym_value,gap,iters_antisym");
  ExperimentConfig sd = small();
  sd.cells_per_side = 16;
  sd.deltas = {0.25, 0.125};
  EXPECT_EQ(first_line(run_experiment("sweep-delta", sd).csv), "delta,d_star,p_star_antisym,local_ref");
}

TEST(Runner, AdjointCheck) {
  for (int dim : {1, 2}) {
    ExperimentConfig c = small();
    c.dimension = dim;
    const RunResult r = run_experiment("adjoint-check", c);
    EXPECT_EQ(r.exit_code, kExitOk);
    EXPECT_EQ(first_line(r.csv), "trials,max_residual,tolerance");
    EXPECT_LE(r.report.at("max_residual").get<double>(), 1e-12);
  }
}

TEST(Runner, ExitCodes) {
  ExperimentConfig c = small();
  EXPECT_EQ(run_experiment("solve-bp", c).exit_code, kExitOk);
  c.solver.max_iters = 10;
  const RunResult r = run_experiment("solve-bp", c);
  EXPECT_EQ(r.exit_code, kExitNotConverged);
  EXPECT_FALSE(r.diagnostics.empty());
  c = small();
  c.cells_per_side = 1;
  EXPECT_THROW(run_experiment("solve-bp", c), ConfigurationError);
}

TEST(Runner, DeterministicArtifacts) {
  const auto root = std::filesystem::temp_directory_path() / "nlflux_test_experiment";
  ExperimentConfig c = small();
  c.solver.seed = 3;
  for (const char* name : {"a", "b"}) {
    write_artifacts(run_experiment("solve-dual", c), root / name);
  }
  for (const char* file : {"results.csv", "temperature.csv", "report.json"}) {
    const std::string a = slurp(root / "a" / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, slurp(root / "b" / file)) << file;
  }
  std::filesystem::remove_all(root);
}

TEST(Runner, DesignWritesConductivity) {
  ExperimentConfig c = small();
  c.cells_per_side = 16;
  c.delta = 0.25;
  c.budget = BudgetSpec{0.1, 1.0};
  const RunResult r = run_experiment("design-gamma", c);
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(first_line(r.csv), "gamma,p_hat,lower_cert,upper_cert,iterations,converged");
  ASSERT_TRUE(r.files.count("conductivity.csv"));
}
