#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace nlflux;
using nlflux::testing::Horizon1D;
using nlflux::testing::random_pairs;

namespace {

RowNormProfile hand_profile() { return {{2.0, 1.0}, 1.0}; }

DesignBudget hand_budget(double cap) { return {1.0 / cap, 1.0, 2.0}; }

}  // namespace

TEST(Conductivity, UnboundedHandExample) {
  const Conductivity c = optimal_conductivity_unbounded(hand_profile(), 2.0);
  ASSERT_EQ(c.kappa.size(), 2u);
  EXPECT_DOUBLE_EQ(c.kappa[0], 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.kappa[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.value, 9.0 / 4.0);
  EXPECT_DOUBLE_EQ(compliance(c.kappa, hand_profile()), 9.0 / 4.0);
  // Budget is active.
  EXPECT_DOUBLE_EQ(c.kappa[0] + c.kappa[1], 2.0);
}

TEST(Conductivity, ZeroFluxIsDegenerate) {
  EXPECT_THROW(optimal_conductivity_unbounded(RowNormProfile{{0.0, 0.0}, 1.0}, 1.0), DegenerateInputError);
  EXPECT_THROW(water_filling_conductivity(RowNormProfile{{0.0, 0.0}, 1.0}, hand_budget(1.0)),
               DegenerateInputError);
}

TEST(Conductivity, InactiveCapGivesClosedForm) {
  const Conductivity c = water_filling_conductivity(hand_profile(), hand_budget(10.0));
  EXPECT_DOUBLE_EQ(c.kappa[0], 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.value, 9.0 / 4.0);
}

TEST(Conductivity, PartiallyCapped) {
  const Conductivity c = water_filling_conductivity(hand_profile(), hand_budget(1.2));
  EXPECT_NEAR(c.kappa[0], 1.2, 1e-12);
  EXPECT_NEAR(c.kappa[1], 0.8, 1e-10);
  EXPECT_NEAR(c.value, 0.5 * (4.0 / 1.2 + 1.0 / 0.8), 1e-10);
}

TEST(Conductivity, AllCapped) {
  const Conductivity c = water_filling_conductivity(hand_profile(), hand_budget(1.0));
  EXPECT_DOUBLE_EQ(c.kappa[0], 1.0);
  EXPECT_DOUBLE_EQ(c.kappa[1], 1.0);
  EXPECT_DOUBLE_EQ(c.value, 2.5);
}

TEST(Conductivity, BeatsRandomFeasibleDesigns) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Horizon1D s;
  const TwoPointField q = random_pairs(s.kernel, SymmetryClass::Antisymmetric, rng);
  const RowNormProfile r = row_norms(q);
  for (double gamma : {0.0, 0.5, 2.0}) {
    const DesignBudget b = DesignBudget::for_grid(s.grid, gamma);
    const Conductivity best = water_filling_conductivity(r, b);
    const double used = r.weight * std::accumulate(best.kappa.begin(), best.kappa.end(), 0.0);
    EXPECT_LE(used, b.volume * (1.0 + 1e-9));
    for (double k : best.kappa) {
      EXPECT_GE(k, 0.0);
      EXPECT_LE(k, b.upper_bound());
    }
    for (int t = 0; t < 50; ++t) {
      std::vector<double> kappa(r.row.size());
      for (double& k : kappa) {
        k = unit(rng);
      }
      const double total = r.weight * std::accumulate(kappa.begin(), kappa.end(), 0.0);
      const double top = *std::max_element(kappa.begin(), kappa.end());
      const double scale = std::min(b.volume / total, b.upper_bound() / top);
      for (double& k : kappa) {
        k *= scale;
      }
      EXPECT_GE(compliance(kappa, r), best.value * (1.0 - 1e-12));
    }
    if (gamma > 0.0) {
      const Conductivity free = optimal_conductivity_unbounded(r, b.volume);
      EXPECT_GE(best.value, free.value * (1.0 - 1e-12));
    }
  }
}

TEST(Conductivity, HarmonicPairFormMatchesRowForm) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.1, 2.0);
  Horizon1D s;
  const TwoPointField q = random_pairs(s.kernel, SymmetryClass::Antisymmetric, rng);
  std::vector<double> kappa(s.grid.omega_delta_count());
  for (double& k : kappa) {
    k = unit(rng);
  }
  EXPECT_NEAR(harmonic_compliance(kappa, q), compliance(kappa, row_norms(q)), 1e-12);
  const std::vector<double> flat(kappa.size(), 0.5);
  EXPECT_NEAR(harmonic_compliance(flat, q), inner(q, q), 1e-12);
}

TEST(Budget, Validation) {
  const Grid g = build_grid(1, 16, 0.25);
  EXPECT_NEAR(DesignBudget::for_grid(g, 0.1).volume, g.omega_delta_volume(), 1e-15);
  EXPECT_THROW(DesignBudget::for_grid(g, -0.1), ConfigurationError);
  EXPECT_THROW(DesignBudget::for_grid(g, 0.1, 0.0), ConfigurationError);
  EXPECT_TRUE(std::isinf(DesignBudget::for_grid(g, 0.0).upper_bound()));
}

TEST(DesignGamma, CertifiedSweep) {
  Horizon1D s;
  const double pa = solve_basis_pursuit(s.ones, s.kernel, true).report.optimal_value;
  const double volume = s.grid.omega_delta_volume();
  const double unbounded = pa * pa / (2.0 * volume);
  double previous = std::numeric_limits<double>::infinity();
  for (double gamma : {0.5, 0.1, 0.02}) {
    const DesignBudget b = DesignBudget::for_grid(s.grid, gamma);
    const DesignSolution sol = solve_design_gamma(s.ones, s.kernel, b);
    const SolveReport& rep = sol.report;
    ASSERT_TRUE(rep.converged) << gamma;
    const double lower = rep.breakdown.at("lower_cert");
    const double upper = rep.breakdown.at("upper_cert");
    EXPECT_LE(lower, rep.optimal_value + 1e-9);
    EXPECT_LE(rep.optimal_value, upper + 1e-9);
    EXPECT_GE(rep.optimal_value, unbounded - 1e-7);
    EXPECT_LE(rep.optimal_value, previous + 1e-9);
    previous = rep.optimal_value;
    EXPECT_LE(rep.primal_residual, 1e-8);
    EXPECT_EQ(sol.flux.symmetry(), SymmetryClass::Antisymmetric);
    for (std::size_t k = 1; k < rep.history.size(); ++k) {
      EXPECT_LE(rep.history[k].primal, rep.history[k - 1].primal * (1.0 + 1e-12));
    }
    double used = 0.0;
    for (double k : sol.conductivity.values) {
      EXPECT_GE(k, 0.0);
      EXPECT_LE(k, b.upper_bound() * (1.0 + 1e-12));
      used += s.grid.cell_volume() * k;
    }
    EXPECT_LE(used, volume * (1.0 + 1e-9));
    EXPECT_NEAR(compliance(sol.conductivity.values, row_norms(sol.flux)), rep.optimal_value, 1e-9);
  }
  EXPECT_LE(std::abs(previous - unbounded), 0.05 * unbounded);
}

TEST(DesignGamma, ZeroSourceAndBadGamma) {
  Horizon1D s;
  const DesignSolution zero =
      solve_design_gamma(ScalarField::zeros(s.grid, Support::Omega), s.kernel, DesignBudget::for_grid(s.grid, 0.1));
  EXPECT_TRUE(zero.report.converged);
  EXPECT_EQ(zero.report.optimal_value, 0.0);
  EXPECT_EQ(norm_2(zero.flux), 0.0);
  EXPECT_THROW(solve_design_gamma(s.ones, s.kernel, DesignBudget::for_grid(s.grid, 0.0)), ArgumentError);
}

TEST(LocalReference, HandValues) {
  Horizon1D s;
  EXPECT_NEAR(local_reference_1d(s.ones, s.grid), 0.25, 1e-12);
  EXPECT_EQ(local_reference_1d(ScalarField::zeros(s.grid, Support::Omega), s.grid), 0.0);
  EXPECT_NEAR(local_reference_1d(ScalarField::constant(s.grid, Support::Omega, 2.0), s.grid), 0.5, 1e-12);
  const Grid g2 = build_grid(2, 8, 0.25);
  EXPECT_THROW(local_reference_1d(ScalarField::constant(g2, Support::Omega, 1.0), g2), ArgumentError);
}

TEST(DeltaSweep, RowsAreCertified) {
  Horizon1D s;
  const std::vector<DeltaSweepRow> rows = delta_sweep(s.ones, 1, 16, {0.25, 0.125});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) {
    EXPECT_TRUE(row.converged);
    EXPECT_LE(row.d_star, row.p_star_antisym + 1e-7);
    EXPECT_NEAR(row.local_ref, 0.25, 1e-12);
  }
  EXPECT_EQ(rows[1].kernel->stencil.size(), 2u);
  EXPECT_EQ(rows[1].free_flux.pairs_ptr(), rows[1].kernel->pairs);
  EXPECT_THROW(delta_sweep(s.ones, 1, 16, {0.2, 0.25}), ConfigurationError);
  EXPECT_THROW(delta_sweep(s.ones, 1, 16, {0.05}), ConfigurationError);
}
