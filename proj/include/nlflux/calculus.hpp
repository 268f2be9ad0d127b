#pragma once

// Discrete nonlocal gradient, divergence (its exact negative adjoint),
// flux recovery, and the symmetric/antisymmetric splitting.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlflux/error.hpp"
#include "nlflux/fields.hpp"
#include "nlflux/geometry.hpp"

namespace nlflux {

namespace detail {

/// Zero-extends an Omega field to Omega_delta.
inline std::vector<double> extend_by_zero(const ScalarField& u, const Grid& grid) {
  std::vector<double> ext(grid.omega_delta_count(), 0.0);
  for (std::size_t i = 0; i < grid.omega_count(); ++i) {
    ext[grid.omega_cells[i]] = u.values[i];
  }
  return ext;
}

}  // namespace detail

/// G u(i, j) = (u(x_i) - u(x_j)) omega(x_i - x_j) with u = 0 off Omega.
/// The result is stored antisymmetrically.
inline TwoPointField nonlocal_gradient(const ScalarField& u, const Kernel& kernel) {
  const Grid& grid = *kernel.grid;
  require_support(u, grid, Support::Omega, "nonlocal_gradient");
  const std::vector<double> ext = detail::extend_by_zero(u, grid);
  const PairList& pairs = *kernel.pairs;
  TwoPointField g(kernel.pairs, SymmetryClass::Antisymmetric);
  auto out = g.data();
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const auto [a, b] = pairs.ends[e];
    out[e] = (ext[a] - ext[b]) * pairs.weight[e];
  }
  return g;
}

/// D q(x_i) = sum_j h^n (q(j,i) - q(i,j)) omega(x_i - x_j) for x_i in Omega.
inline ScalarField nonlocal_divergence(const TwoPointField& q, const Kernel& kernel) {
  require_pairs(q, kernel, "nonlocal_divergence");
  const Grid& grid = *kernel.grid;
  const PairList& pairs = *kernel.pairs;
  const double w = grid.cell_volume();
  ScalarField out = ScalarField::zeros(grid, Support::Omega);
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const auto [a, b] = pairs.ends[e];
    const double d = w * pairs.weight[e] * (q.backward(e) - q.forward(e));
    if (const auto sa = grid.omega_slot[a]; sa >= 0) {
      out.values[static_cast<std::size_t>(sa)] += d;
    }
    if (const auto sb = grid.omega_slot[b]; sb >= 0) {
      out.values[static_cast<std::size_t>(sb)] -= d;
    }
  }
  return out;
}

/// R q(x_i) = sum_j h^n (x_i - x_j) q(i,j) omega(x_i - x_j) on Omega_delta.
inline VectorField flux_recovery(const TwoPointField& q, const Kernel& kernel) {
  require_pairs(q, kernel, "flux_recovery");
  const Grid& grid = *kernel.grid;
  const PairList& pairs = *kernel.pairs;
  const int n = grid.dimension;
  const double w = grid.cell_volume();
  VectorField r{n, std::vector<double>(grid.omega_delta_count() * n, 0.0)};
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const auto [a, b] = pairs.ends[e];
    const double fa = w * pairs.weight[e] * q.forward(e);
    const double fb = w * pairs.weight[e] * q.backward(e);
    for (int d = 0; d < n; ++d) {
      const double z = grid.centers[a][d] - grid.centers[b][d];
      r.values[a * n + d] += z * fa;
      r.values[b * n + d] -= z * fb;
    }
  }
  return r;
}

/// Antisymmetric part (q(i,j) - q(j,i))/2 or symmetric part (q(i,j) + q(j,i))/2.
inline TwoPointField symmetry_project(const TwoPointField& q, SymmetryClass target) {
  if (target == SymmetryClass::General) {
    throw ArgumentError("symmetry_project: target must be antisymmetric or symmetric");
  }
  if (q.symmetry() == target) {
    return q;
  }
  TwoPointField out(q.pairs_ptr(), target);
  auto v = out.data();
  if (q.symmetry() != SymmetryClass::General) {
    // The opposite constrained class projects to zero.
    return out;
  }
  const double sign = target == SymmetryClass::Antisymmetric ? -1.0 : 1.0;
  for (std::size_t e = 0; e < q.num_pairs(); ++e) {
    v[e] = 0.5 * (q.forward(e) + sign * q.backward(e));
  }
  return out;
}

/// Minimizer of 1/2 sum_e cost_e w_e^2 over antisymmetric fluxes w subject
/// to D w = rhs, computed through the dense Omega x Omega Gram system
/// B C^{-1} B^T. Pairs with infinite cost are frozen at zero.
class MinimumEnergyFlux {
 public:
  MinimumEnergyFlux(const Kernel& kernel, std::vector<double> pair_cost)
      : grid_(kernel.grid), pairs_(kernel.pairs), cost_(std::move(pair_cost)) {
    const Grid& grid = *kernel.grid;
    const PairList& pairs = *kernel.pairs;
    if (cost_.size() != pairs.size()) {
      throw ArgumentError("MinimumEnergyFlux: one cost per unordered pair required");
    }
    const auto m = static_cast<Eigen::Index>(grid.omega_count());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    const double w = grid.cell_volume();
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      if (!std::isfinite(cost_[e])) {
        continue;
      }
      if (!(cost_[e] > 0.0)) {
        throw ArgumentError("MinimumEnergyFlux: pair costs must be positive");
      }
      const double c = 2.0 * w * pairs.weight[e];
      const auto sa = grid.omega_slot[pairs.ends[e][0]];
      const auto sb = grid.omega_slot[pairs.ends[e][1]];
      const double inv = 1.0 / cost_[e];
      if (sa >= 0) {
        gram(sa, sa) += c * c * inv;
      }
      if (sb >= 0) {
        gram(sb, sb) += c * c * inv;
      }
      if (sa >= 0 && sb >= 0) {
        gram(sa, sb) -= c * c * inv;
        gram(sb, sa) -= c * c * inv;
      }
    }
    pinned_.assign(static_cast<std::size_t>(m), false);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (gram(i, i) == 0.0) {
        // No active pair touches this cell: its divergence is identically zero.
        pinned_[static_cast<std::size_t>(i)] = true;
        gram(i, i) = 1.0;
      }
    }
    factor_.compute(gram);
    if (factor_.info() != Eigen::Success) {
      throw NumericalError("MinimumEnergyFlux: divergence Gram matrix is not positive definite");
    }
  }

  TwoPointField solve(const ScalarField& rhs) const {
    const Grid& grid = *grid_;
    const PairList& pairs = *pairs_;
    require_support(rhs, grid, Support::Omega, "MinimumEnergyFlux::solve");
    const auto m = static_cast<Eigen::Index>(grid.omega_count());
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      b(i) = rhs.values[static_cast<std::size_t>(i)];
      if (pinned_[static_cast<std::size_t>(i)]) {
        if (b(i) != 0.0) {
          throw NumericalError("MinimumEnergyFlux: nonzero source on a cell without active pairs");
        }
      }
    }
    const Eigen::VectorXd lambda = factor_.solve(b);
    TwoPointField out(pairs_, SymmetryClass::Antisymmetric);
    auto v = out.data();
    const double w = grid.cell_volume();
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      if (!std::isfinite(cost_[e])) {
        continue;
      }
      const double c = 2.0 * w * pairs.weight[e];
      const auto sa = grid.omega_slot[pairs.ends[e][0]];
      const auto sb = grid.omega_slot[pairs.ends[e][1]];
      double bt = 0.0;
      if (sa >= 0) {
        bt -= c * lambda(sa);
      }
      if (sb >= 0) {
        bt += c * lambda(sb);
      }
      v[e] = bt / cost_[e];
    }
    return out;
  }

  /// Uniform costs give the minimum-norm correction in the weighted l2 norm.
  static MinimumEnergyFlux least_norm(const Kernel& kernel) {
    return MinimumEnergyFlux(kernel, std::vector<double>(kernel.pairs->size(), 1.0));
  }

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const PairList> pairs_;
  std::vector<double> cost_;
  std::vector<bool> pinned_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Upper estimate of ||D|| between the weighted l2 spaces, by power
/// iteration on -D G = D D^*, inflated by 1% after the Rayleigh quotient
/// settles to 1e-6 relative change.
///
/// D only sees the antisymmetric part of its argument and D^* = -G maps into
/// antisymmetric fields, so the restriction flag does not change the value;
/// it is accepted for callers that state the subspace explicitly.
inline double operator_norm_estimate(const Kernel& kernel, bool restricted_antisymmetric = true,
                                     std::uint64_t seed = 0, int max_iters = 100000) {
  static_cast<void>(restricted_antisymmetric);
  const Grid& grid = *kernel.grid;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ScalarField v = ScalarField::zeros(grid, Support::Omega);
  for (double& x : v.values) {
    x = normal(rng);
  }
  double previous = 0.0;
  double rayleigh = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const double vv = inner(v, v, grid);
    if (!(vv > 0.0)) {
      throw NumericalError("operator_norm_estimate: iterate vanished");
    }
    const TwoPointField g = nonlocal_gradient(v, kernel);
    rayleigh = inner(g, g) / vv;
    ScalarField next = nonlocal_divergence(g, kernel);
    const double scale = 1.0 / std::sqrt(inner(next, next, grid));
    for (double& x : next.values) {
      x *= -scale;
    }
    v = std::move(next);
    if (it > 0 && std::abs(rayleigh - previous) <= 1e-6 * rayleigh) {
      return 1.01 * std::sqrt(rayleigh);
    }
    previous = rayleigh;
  }
  throw NumericalError("operator_norm_estimate: power iteration did not settle after " +
                       std::to_string(max_iters) + " iterations (last Rayleigh quotient " +
                       format_real(rayleigh) + ")");
}

}  // namespace nlflux
