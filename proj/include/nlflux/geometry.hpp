#pragma once

// Uniform cell decompositions of the unit interval/square, their
// delta-collars, and the interaction kernel acting on cell pairs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "nlflux/error.hpp"

namespace nlflux {

using Point = std::array<double, 2>;
using LatticeIndex = std::array<int, 2>;

enum class InteractionMode {
  /// Pairs closer than the horizon interact; Omega is surrounded by a collar.
  Horizon,
  /// Every pair of distinct Omega cells interacts with unit weight, no collar.
  Full,
};

enum class KernelProfile { Constant, FullInteraction };

/// Relative slack used when deciding strict inequalities such as
/// |z| < delta on the lattice, so that mathematically tied offsets are
/// excluded regardless of rounding in delta / h.
inline constexpr double kTieTolerance = 1e-12;

namespace detail {

inline bool strictly_inside(double squared_lattice_distance, double horizon_in_cells) {
  return squared_lattice_distance <
         horizon_in_cells * horizon_in_cells * (1.0 - kTieTolerance);
}

}  // namespace detail

/// Midpoint-collocated cells of Omega = (0,1)^n and of its delta-enlargement.
///
/// Cells are ordered lexicographically by lattice coordinates, first axis
/// slowest. Cell k along an axis spans [k h, (k+1) h]; Omega cells have
/// 0 <= k < N, collar cells have negative k or k >= N.
struct Grid {
  int dimension = 1;
  int cells_per_side = 0;
  double spacing = 0.0;
  double delta = 0.0;
  InteractionMode mode = InteractionMode::Horizon;

  std::vector<LatticeIndex> lattice;
  std::vector<Point> centers;
  /// Omega_delta cell -> position in Omega, or -1 for collar cells.
  std::vector<std::int64_t> omega_slot;
  /// Omega position -> Omega_delta cell.
  std::vector<std::size_t> omega_cells;

  std::size_t omega_count() const { return omega_cells.size(); }
  std::size_t omega_delta_count() const { return centers.size(); }
  double cell_volume() const { return std::pow(spacing, dimension); }
  double omega_delta_volume() const {
    return cell_volume() * static_cast<double>(omega_delta_count());
  }
  bool in_omega(std::size_t cell) const { return omega_slot[cell] >= 0; }

  /// Omega_delta cell at the given lattice coordinates, or -1.
  std::int64_t find(const LatticeIndex& k) const {
    long flat = 0;
    for (int d = 0; d < dimension; ++d) {
      const int local = k[d] - lattice_min_;
      if (local < 0 || local >= lattice_extent_) {
        return -1;
      }
      flat = flat * lattice_extent_ + local;
    }
    return lookup_[static_cast<std::size_t>(flat)];
  }

  int lattice_min_ = 0;
  int lattice_extent_ = 0;
  std::vector<std::int64_t> lookup_;
};

inline double squared_distance(const Point& a, const Point& b, int dimension) {
  double s = 0.0;
  for (int d = 0; d < dimension; ++d) {
    s += (a[d] - b[d]) * (a[d] - b[d]);
  }
  return s;
}

namespace detail {

inline void validate_grid_shape(int dimension, int cells_per_side) {
  if (dimension != 1 && dimension != 2) {
    throw ConfigurationError("dimension must be 1 or 2, got " + std::to_string(dimension));
  }
  if (cells_per_side < 2) {
    throw ConfigurationError("cells_per_side must be at least 2, got " +
                             std::to_string(cells_per_side));
  }
}

inline Grid assemble_grid(int dimension, int cells_per_side, double delta,
                          InteractionMode mode, int collar) {
  Grid grid;
  grid.dimension = dimension;
  grid.cells_per_side = cells_per_side;
  grid.spacing = 1.0 / cells_per_side;
  grid.delta = delta;
  grid.mode = mode;
  grid.lattice_min_ = -collar;
  grid.lattice_extent_ = cells_per_side + 2 * collar;

  std::size_t table = 1;
  for (int d = 0; d < dimension; ++d) {
    table *= static_cast<std::size_t>(grid.lattice_extent_);
  }
  grid.lookup_.assign(table, -1);

  const double horizon_cells = delta * cells_per_side;
  const int lo = -collar;
  const int hi = cells_per_side + collar;
  const int inner_hi = dimension == 2 ? hi : lo + 1;
  for (int k0 = lo; k0 < hi; ++k0) {
    for (int k1 = lo; k1 < inner_hi; ++k1) {
      const LatticeIndex k{k0, dimension == 2 ? k1 : 0};
      // Distance from the cell center to the closed unit cube, in cells.
      double dist2 = 0.0;
      bool inside = true;
      for (int d = 0; d < dimension; ++d) {
        const double c = k[d] + 0.5;
        const double excess = std::max({0.0, -c, c - cells_per_side});
        dist2 += excess * excess;
        inside = inside && k[d] >= 0 && k[d] < cells_per_side;
      }
      if (!inside && (mode == InteractionMode::Full ||
                      !strictly_inside(dist2, horizon_cells))) {
        continue;
      }
      const std::size_t cell = grid.centers.size();
      grid.lattice.push_back(k);
      Point p{0.0, 0.0};
      for (int d = 0; d < dimension; ++d) {
        p[d] = (k[d] + 0.5) * grid.spacing;
      }
      grid.centers.push_back(p);
      grid.omega_slot.push_back(inside ? static_cast<std::int64_t>(grid.omega_cells.size()) : -1);
      if (inside) {
        grid.omega_cells.push_back(cell);
      }
      long flat = 0;
      for (int d = 0; d < dimension; ++d) {
        flat = flat * grid.lattice_extent_ + (k[d] - grid.lattice_min_);
      }
      grid.lookup_[static_cast<std::size_t>(flat)] = static_cast<std::int64_t>(cell);
    }
  }
  return grid;
}

}  // namespace detail

/// Builds the horizon-mode grid: N^n Omega cells plus every cell whose
/// center lies strictly within delta of the closed unit square.
inline Grid build_grid(int dimension, int cells_per_side, double delta) {
  detail::validate_grid_shape(dimension, cells_per_side);
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ConfigurationError("delta must lie in (0, 1), got " + std::to_string(delta));
  }
  const int collar = static_cast<int>(std::ceil(delta * cells_per_side)) + 1;
  return detail::assemble_grid(dimension, cells_per_side, delta, InteractionMode::Horizon,
                               collar);
}

/// Grid without collar for kernel-free pairings over Omega x Omega.
inline Grid build_full_interaction_grid(int dimension, int cells_per_side) {
  detail::validate_grid_shape(dimension, cells_per_side);
  return detail::assemble_grid(dimension, cells_per_side,
                               std::numeric_limits<double>::infinity(),
                               InteractionMode::Full, 0);
}

/// Unordered interacting cell pairs (a < b) and their kernel weights.
struct PairList {
  std::vector<std::array<std::uint32_t, 2>> ends;
  std::vector<double> weight;
  /// Number of Omega_delta cells, i.e. rows of two-point fields.
  std::size_t cell_count = 0;
  /// h^n; two-point inner products carry weight h^{2n} per ordered pair.
  double cell_volume = 0.0;

  std::size_t size() const { return ends.size(); }
};

/// K_{2,n}: mean of |s . e|^2 over the unit sphere, which equals 1/n.
inline double second_moment_constant(int dimension) { return 1.0 / dimension; }

struct Kernel {
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const PairList> pairs;
  double delta = 0.0;
  KernelProfile profile = KernelProfile::Constant;
  double amplitude = 0.0;
  int dimension = 1;
  double second_moment_constant = 1.0;
  /// Lattice offsets m with 0 < |m| h < delta (horizon mode only).
  std::vector<LatticeIndex> stencil;

  /// omega(z) for a displacement z.
  double operator()(const Point& z) const {
    if (profile == KernelProfile::FullInteraction) {
      return 1.0;
    }
    const double h = grid->spacing;
    const double r2 = squared_distance(z, Point{0.0, 0.0}, dimension) / (h * h);
    return detail::strictly_inside(r2, delta / h) ? amplitude : 0.0;
  }

  /// Quadrature of |z|^2 omega(z)^2 over the offset stencil, weight h^n.
  double discrete_second_moment() const {
    const double h = grid->spacing;
    double s = 0.0;
    for (const auto& m : stencil) {
      double r2 = 0.0;
      for (int d = 0; d < dimension; ++d) {
        r2 += static_cast<double>(m[d]) * m[d] * h * h;
      }
      s += r2;
    }
    return std::pow(h, dimension) * s * amplitude * amplitude;
  }
};

namespace detail {

inline std::shared_ptr<const PairList> enumerate_pairs(const Grid& grid,
                                                       const std::vector<LatticeIndex>& stencil,
                                                       double amplitude) {
  auto pairs = std::make_shared<PairList>();
  pairs->cell_count = grid.omega_delta_count();
  pairs->cell_volume = grid.cell_volume();
  for (std::size_t a = 0; a < grid.omega_delta_count(); ++a) {
    for (const auto& m : stencil) {
      LatticeIndex k = grid.lattice[a];
      for (int d = 0; d < grid.dimension; ++d) {
        k[d] += m[d];
      }
      const std::int64_t b = grid.find(k);
      if (b > static_cast<std::int64_t>(a)) {
        pairs->ends.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
        pairs->weight.push_back(amplitude);
      }
    }
  }
  return pairs;
}

}  // namespace detail

/// Constant-on-ball kernel whose amplitude enforces the discrete
/// normalization sum_z h^n |z|^2 omega(z)^2 = 1 / K_{2,n}.
inline Kernel build_kernel(const Grid& grid, double delta) {
  if (grid.mode != InteractionMode::Horizon) {
    throw ConfigurationError("build_kernel requires a horizon-mode grid");
  }
  if (!(delta > 0.0)) {
    throw ConfigurationError("kernel horizon must be positive");
  }
  if (delta > grid.delta * (1.0 + kTieTolerance)) {
    throw ConfigurationError("kernel horizon exceeds the grid collar width");
  }
  Kernel kernel;
  kernel.grid = std::make_shared<const Grid>(grid);
  kernel.delta = delta;
  kernel.profile = KernelProfile::Constant;
  kernel.dimension = grid.dimension;
  kernel.second_moment_constant = second_moment_constant(grid.dimension);

  const double horizon_cells = delta * grid.cells_per_side;
  const int reach = static_cast<int>(std::ceil(horizon_cells));
  const int lo1 = grid.dimension == 2 ? -reach : 0;
  const int hi1 = grid.dimension == 2 ? reach : 0;
  double moment = 0.0;
  for (int m0 = -reach; m0 <= reach; ++m0) {
    for (int m1 = lo1; m1 <= hi1; ++m1) {
      const double r2 = static_cast<double>(m0) * m0 + static_cast<double>(m1) * m1;
      if (r2 == 0.0 || !detail::strictly_inside(r2, horizon_cells)) {
        continue;
      }
      kernel.stencil.push_back({m0, m1});
      moment += r2 * grid.spacing * grid.spacing;
    }
  }
  if (kernel.stencil.empty()) {
    throw ConfigurationError("no lattice offset lies strictly inside the horizon; delta <= h");
  }
  moment *= grid.cell_volume();
  kernel.amplitude = std::sqrt(1.0 / (kernel.second_moment_constant * moment));
  // Polish so that the quadrature reproduces the target to rounding.
  kernel.amplitude *= std::sqrt(1.0 / (kernel.second_moment_constant *
                                       kernel.discrete_second_moment()));
  kernel.pairs = detail::enumerate_pairs(grid, kernel.stencil, kernel.amplitude);
  return kernel;
}

/// Unit weight on every pair of distinct Omega cells.
inline Kernel build_full_interaction_kernel(const Grid& grid) {
  if (grid.mode != InteractionMode::Full) {
    throw ConfigurationError("build_full_interaction_kernel requires a full-interaction grid");
  }
  Kernel kernel;
  kernel.grid = std::make_shared<const Grid>(grid);
  kernel.delta = std::numeric_limits<double>::infinity();
  kernel.profile = KernelProfile::FullInteraction;
  kernel.amplitude = 1.0;
  kernel.dimension = grid.dimension;
  kernel.second_moment_constant = second_moment_constant(grid.dimension);

  auto pairs = std::make_shared<PairList>();
  const std::size_t n = grid.omega_delta_count();
  pairs->cell_count = n;
  pairs->cell_volume = grid.cell_volume();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      pairs->ends.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
      pairs->weight.push_back(1.0);
    }
  }
  kernel.pairs = std::move(pairs);
  return kernel;
}

/// Copy of the kernel with every weight multiplied by factor. The result no
/// longer satisfies the normalization unless factor = 1.
inline Kernel rescaled_kernel(const Kernel& kernel, double factor) {
  Kernel out = kernel;
  out.amplitude *= factor;
  auto pairs = std::make_shared<PairList>(*kernel.pairs);
  for (double& w : pairs->weight) {
    w *= factor;
  }
  out.pairs = std::move(pairs);
  return out;
}

}  // namespace nlflux
