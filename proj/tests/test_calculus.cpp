#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace nlflux;
using nlflux::testing::fixture;
using nlflux::testing::random_pairs;
using nlflux::testing::random_scalar;

TEST(Gradient, ZeroFieldGivesZero) {
  const Grid g = build_grid(1, 8, 0.3);
  const Kernel k = build_kernel(g, 0.3);
  const TwoPointField gu = nonlocal_gradient(ScalarField::zeros(g, Support::Omega), k);
  EXPECT_EQ(gu.symmetry(), SymmetryClass::Antisymmetric);
  for (double x : gu.data()) {
    EXPECT_EQ(x, 0.0);
  }
}

TEST(Gradient, ConstantVanishesInsideAndJumpsAtBoundary) {
  const Grid g = build_grid(2, 6, 0.4);
  const Kernel k = build_kernel(g, 0.4);
  const TwoPointField gu = nonlocal_gradient(ScalarField::constant(g, Support::Omega, 3.0), k);
  for (std::size_t e = 0; e < k.pairs->size(); ++e) {
    const auto [a, b] = k.pairs->ends[e];
    const double expected = 3.0 * k.amplitude * ((g.in_omega(a) ? 1.0 : 0.0) - (g.in_omega(b) ? 1.0 : 0.0));
    EXPECT_DOUBLE_EQ(gu.forward(e), expected);
    EXPECT_DOUBLE_EQ(gu.backward(e), -expected);
  }
}

TEST(Gradient, IndicatorTouchesOnlyItsPairs) {
  const Grid g = build_grid(1, 4, 0.3);
  const Kernel k = build_kernel(g, 0.3);
  ScalarField u = ScalarField::zeros(g, Support::Omega);
  u.values[1] = 1.0;
  const std::size_t cell = g.omega_cells[1];
  const TwoPointField gu = nonlocal_gradient(u, k);
  std::size_t touching = 0;
  for (std::size_t e = 0; e < k.pairs->size(); ++e) {
    const auto [a, b] = k.pairs->ends[e];
    if (a == cell || b == cell) {
      ++touching;
      EXPECT_DOUBLE_EQ(std::abs(gu.forward(e)), k.amplitude);
    } else {
      EXPECT_EQ(gu.forward(e), 0.0);
    }
    EXPECT_EQ(gu.forward(e) + gu.backward(e), 0.0);
  }
  EXPECT_EQ(touching, 2u);
}

TEST(Gradient, RejectsWrongSupport) {
  const Grid g = build_grid(1, 8, 0.3);
  const Kernel k = build_kernel(g, 0.3);
  EXPECT_THROW(nonlocal_gradient(ScalarField::zeros(g, Support::OmegaDelta), k), ArgumentError);
}

TEST(Divergence, AnnihilatesSymmetricFields) {
  std::mt19937_64 rng(3);
  for (int n : {1, 2}) {
    const Grid g = build_grid(n, 8, 0.3);
    const Kernel k = build_kernel(g, 0.3);
    const TwoPointField s = random_pairs(k, SymmetryClass::Symmetric, rng);
    for (double x : nonlocal_divergence(s, k).values) {
      EXPECT_NEAR(x, 0.0, 1e-13);
    }
  }
}

TEST(Divergence, AdjointOfGradient) {
  std::mt19937_64 rng(11);
  for (auto [n, cells] : {std::pair{1, 16}, std::pair{2, 8}}) {
    const Grid g = build_grid(n, cells, 0.25);
    const Kernel k = build_kernel(g, 0.25);
    for (int t = 0; t < 100; ++t) {
      const TwoPointField q = random_pairs(k, SymmetryClass::General, rng);
      const ScalarField v = random_scalar(g, Support::Omega, rng);
      const TwoPointField gv = nonlocal_gradient(v, k);
      const double lhs = inner(nonlocal_divergence(q, k), v, g);
      const double rhs = inner(q, gv);
      EXPECT_LE(std::abs(lhs + rhs), 1e-12 * (norm_2(q) * norm_2(gv) + 1.0));
    }
  }
}

TEST(Divergence, LinearFluxOnLargeHorizonIsDivergenceFree) {
  // Every Omega cell sees the same symmetric stencil {+-1, +-2} h.
  const Grid g = build_grid(1, 3, 0.9);
  const Kernel k = build_kernel(g, 0.9);
  const TwoPointField q = TwoPointField::from_function(
      k.pairs, SymmetryClass::General,
      [&](std::size_t a, std::size_t b) { return (g.centers[b][0] - g.centers[a][0]) * k.amplitude; });
  for (double x : nonlocal_divergence(q, k).values) {
    EXPECT_NEAR(x, 0.0, 1e-13);
  }
}

TEST(Divergence, FullInteractionHandValue) {
  const Grid g = build_full_interaction_grid(1, 3);
  const Kernel k = build_full_interaction_kernel(g);
  const TwoPointField q = TwoPointField::from_function(
      k.pairs, SymmetryClass::General,
      [&](std::size_t a, std::size_t b) { return g.centers[b][0] - g.centers[a][0]; });
  const ScalarField d = nonlocal_divergence(q, k);
  const auto expected = fixture("divergence-full-1d-3").at("value").get<std::vector<double>>();
  ASSERT_EQ(d.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(d.values[i], expected[i], 1e-14);
  }
}

TEST(Divergence, RejectsForeignPairList) {
  const Grid g = build_grid(1, 8, 0.3);
  const Kernel k1 = build_kernel(g, 0.3);
  const Kernel k2 = build_kernel(g, 0.3);
  TwoPointField q(k1.pairs, SymmetryClass::General);
  EXPECT_THROW(nonlocal_divergence(q, k2), ArgumentError);
  EXPECT_THROW(flux_recovery(q, k2), ArgumentError);
}

TEST(FluxRecovery, ZeroAndNormBound) {
  std::mt19937_64 rng(5);
  for (int n : {1, 2}) {
    const Grid g = build_grid(n, 8, 0.3);
    const Kernel k = build_kernel(g, 0.3);
    const VectorField z = flux_recovery(TwoPointField(k.pairs, SymmetryClass::Antisymmetric), k);
    EXPECT_EQ(z.cells(), g.omega_delta_count());
    EXPECT_EQ(norm_l1(z, g.cell_volume()), 0.0);
    for (int t = 0; t < 50; ++t) {
      for (auto cls : {SymmetryClass::Antisymmetric, SymmetryClass::General}) {
        const TwoPointField q = random_pairs(k, cls, rng);
        EXPECT_LE(norm_l1(flux_recovery(q, k), g.cell_volume()), norm_12(q) * (1.0 + 1e-12));
      }
    }
  }
}

TEST(SymmetryProject, Decomposition) {
  std::mt19937_64 rng(8);
  const Grid g = build_grid(2, 6, 0.35);
  const Kernel k = build_kernel(g, 0.35);
  const TwoPointField q = random_pairs(k, SymmetryClass::General, rng);
  const TwoPointField p = random_pairs(k, SymmetryClass::General, rng);
  const TwoPointField a = symmetry_project(q, SymmetryClass::Antisymmetric);
  const TwoPointField s = symmetry_project(q, SymmetryClass::Symmetric);
  const TwoPointField sum = a.as_general() + s.as_general();
  for (std::size_t e = 0; e < q.num_pairs(); ++e) {
    EXPECT_NEAR(sum.forward(e), q.forward(e), 1e-15);
    EXPECT_NEAR(sum.backward(e), q.backward(e), 1e-15);
  }
  EXPECT_NEAR(inner(a, symmetry_project(p, SymmetryClass::Symmetric)), 0.0, 1e-14);
  const TwoPointField aa = symmetry_project(a, SymmetryClass::Antisymmetric);
  EXPECT_TRUE(std::equal(aa.data().begin(), aa.data().end(), a.data().begin()));
  EXPECT_THROW(symmetry_project(q, SymmetryClass::General), ArgumentError);
  const TwoPointField none = symmetry_project(a, SymmetryClass::Symmetric);
  EXPECT_EQ(norm_2(none), 0.0);
}

TEST(OperatorNorm, BoundsRandomQuotients) {
  std::mt19937_64 rng(2);
  const Grid g = build_grid(1, 16, 0.25);
  const Kernel k = build_kernel(g, 0.25);
  const double est = operator_norm_estimate(k);
  for (int t = 0; t < 100; ++t) {
    const TwoPointField q = random_pairs(k, SymmetryClass::General, rng);
    const ScalarField d = nonlocal_divergence(q, k);
    EXPECT_LE(inner(d, d, g), est * est * inner(q, q));
  }
}

TEST(OperatorNorm, HomogeneousInAmplitude) {
  const Grid g = build_grid(2, 6, 0.4);
  const Kernel k = build_kernel(g, 0.4);
  const double ratio = operator_norm_estimate(rescaled_kernel(k, 2.0)) / operator_norm_estimate(k);
  EXPECT_NEAR(ratio, 2.0, 1e-9);
}

TEST(OperatorNorm, DenseSingularValueFixture) {
  const Grid g = build_grid(1, 8, 0.3);
  const Kernel k = build_kernel(g, 0.3);
  const double sigma = fixture("operator-norm-1d-8").at("value").get<double>();
  const double est = operator_norm_estimate(k, true);
  EXPECT_GE(est, sigma);
  EXPECT_LE(est, 1.011 * sigma);
  EXPECT_DOUBLE_EQ(operator_norm_estimate(k, false), est);
}

TEST(MinimumEnergyFlux, FeasibleAndShortest) {
  std::mt19937_64 rng(4);
  const Grid g = build_grid(1, 12, 0.3);
  const Kernel k = build_kernel(g, 0.3);
  const MinimumEnergyFlux solver = MinimumEnergyFlux::least_norm(k);
  const ScalarField f = random_scalar(g, Support::Omega, rng);
  const TwoPointField w = solver.solve(f);
  const ScalarField dw = nonlocal_divergence(w, k);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(dw.values[i], f.values[i], 1e-10);
  }
  for (int t = 0; t < 20; ++t) {
    // Random divergence-free antisymmetric perturbation.
    TwoPointField z = random_pairs(k, SymmetryClass::Antisymmetric, rng);
    z -= solver.solve(nonlocal_divergence(z, k));
    EXPECT_LE(norm_2(w), norm_2(w + z) + 1e-12);
  }
}

TEST(MinimumEnergyFlux, FrozenPairsStayZero) {
  const Grid g = build_grid(1, 8, 0.3);
  const Kernel k = build_kernel(g, 0.3);
  std::vector<double> cost(k.pairs->size(), 1.0);
  cost[0] = std::numeric_limits<double>::infinity();
  const TwoPointField w = MinimumEnergyFlux(k, cost).solve(ScalarField::constant(g, Support::Omega, 1.0));
  EXPECT_EQ(w.forward(0), 0.0);
  EXPECT_THROW(MinimumEnergyFlux(k, std::vector<double>(3, 1.0)), ArgumentError);
}
