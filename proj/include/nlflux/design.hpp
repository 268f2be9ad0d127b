#pragma once

// Conductivity design in the vanishing-material regime: closed-form and
// box-constrained optimal conductivities for a given flux, the alternating
// design solve with its two-sided certificate, the 1D local reference
// value and the horizon sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlflux/calculus.hpp"
#include "nlflux/error.hpp"
#include "nlflux/fields.hpp"
#include "nlflux/geometry.hpp"
#include "nlflux/mixed_norms.hpp"
#include "nlflux/solvers.hpp"

namespace nlflux {

/// gamma = 0 is the unbounded budget; otherwise 0 <= kappa <= kappa_bar / gamma.
struct DesignBudget {
  double gamma = 0.0;
  double kappa_bar = 1.0;
  /// |Omega_delta| in the discrete measure.
  double volume = 0.0;

  static DesignBudget for_grid(const Grid& grid, double gamma, double kappa_bar = 1.0) {
    DesignBudget b{gamma, kappa_bar, grid.omega_delta_volume()};
    b.validate();
    return b;
  }

  double upper_bound() const {
    return gamma > 0.0 ? kappa_bar / gamma : std::numeric_limits<double>::infinity();
  }

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw ConfigurationError("budget: gamma must be finite and nonnegative");
    }
    if (!(kappa_bar > 0.0) || !std::isfinite(kappa_bar)) {
      throw ConfigurationError("budget: kappa_bar must be positive");
    }
    if (!(volume > 0.0)) {
      throw ConfigurationError("budget: volume must be positive");
    }
  }
};

struct Conductivity {
  std::vector<double> kappa;
  double value = 0.0;
};

/// 1/2 sum_i w kappa_i^{-1} r_i^2 with 0^{-1} 0^2 = 0.
inline double compliance(std::span<const double> kappa, const RowNormProfile& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.row.size(); ++i) {
    if (r.row[i] == 0.0) {
      continue;
    }
    if (!(kappa[i] > 0.0)) {
      return std::numeric_limits<double>::infinity();
    }
    s += r.row[i] * r.row[i] / kappa[i];
  }
  return 0.5 * r.weight * s;
}

/// Pair form 1/2 sum over ordered pairs h^{2n} k(i,j)^{-1} q(i,j)^2 with the
/// harmonic pair conductivity 2 k(i,j)^{-1} = kappa_i^{-1} + kappa_j^{-1}.
inline double harmonic_compliance(std::span<const double> kappa, const TwoPointField& q) {
  const PairList& pairs = q.pairs();
  const double w2 = pairs.cell_volume * pairs.cell_volume;
  auto inv = [&](std::size_t i) {
    return kappa[i] > 0.0 ? 1.0 / kappa[i] : std::numeric_limits<double>::infinity();
  };
  double s = 0.0;
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const double f = q.forward(e);
    const double b = q.backward(e);
    if (f == 0.0 && b == 0.0) {
      continue;
    }
    const double k = 0.5 * (inv(pairs.ends[e][0]) + inv(pairs.ends[e][1]));
    s += k * (f * f + b * b);
  }
  return 0.5 * w2 * s;
}

/// kappa = c r with c = volume / sum(w r), value (2 volume)^{-1} (sum w r)^2.
inline Conductivity optimal_conductivity_unbounded(const RowNormProfile& r, double volume) {
  const double n12 = r.norm_12();
  if (!(n12 > 0.0)) {
    throw DegenerateInputError("optimal_conductivity_unbounded: flux is identically zero");
  }
  const double c = volume / n12;
  Conductivity out;
  out.kappa.resize(r.row.size());
  for (std::size_t i = 0; i < r.row.size(); ++i) {
    out.kappa[i] = c * r.row[i];
  }
  out.value = n12 * n12 / (2.0 * volume);
  return out;
}

inline std::pair<ScalarField, double> optimal_conductivity_unbounded(const TwoPointField& q,
                                                                     double volume) {
  Conductivity c = optimal_conductivity_unbounded(row_norms(q), volume);
  return {ScalarField{Support::OmegaDelta, std::move(c.kappa)}, c.value};
}

/// Minimizes compliance(kappa, r) over 0 <= kappa <= U, sum w kappa <= volume
/// by kappa = min(U, t r) with t from bisection on the volume constraint.
inline Conductivity water_filling_conductivity(const RowNormProfile& r, const DesignBudget& budget) {
  budget.validate();
  const double n12 = r.norm_12();
  if (!(n12 > 0.0)) {
    throw DegenerateInputError("water_filling_conductivity: flux is identically zero");
  }
  const double cap = budget.upper_bound();
  const double volume = budget.volume;
  const double t_lo0 = volume / n12;
  double r_max = 0.0;
  double r_min = std::numeric_limits<double>::infinity();
  std::size_t active = 0;
  for (double x : r.row) {
    if (x > 0.0) {
      r_max = std::max(r_max, x);
      r_min = std::min(r_min, x);
      ++active;
    }
  }
  Conductivity out;
  out.kappa.assign(r.row.size(), 0.0);
  if (t_lo0 * r_max <= cap) {
    // Bound inactive: the unbounded closed form.
    Conductivity u = optimal_conductivity_unbounded(r, volume);
    return u;
  }
  if (r.weight * cap * static_cast<double>(active) <= volume) {
    for (std::size_t i = 0; i < r.row.size(); ++i) {
      out.kappa[i] = r.row[i] > 0.0 ? cap : 0.0;
    }
    out.value = compliance(out.kappa, r);
    return out;
  }
  auto used = [&](double t) {
    double s = 0.0;
    for (double x : r.row) {
      s += std::min(cap, t * x);
    }
    return r.weight * s;
  };
  double lo = t_lo0;
  double hi = cap / r_min;
  // used(lo) <= volume < used(hi); grow hi defensively against rounding.
  while (used(hi) <= volume) {
    hi *= 2.0;
  }
  for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (used(mid) <= volume ? lo : hi) = mid;
  }
  for (std::size_t i = 0; i < r.row.size(); ++i) {
    out.kappa[i] = std::min(cap, lo * r.row[i]);
  }
  out.value = compliance(out.kappa, r);
  return out;
}

inline std::pair<ScalarField, double> water_filling_conductivity(const TwoPointField& q,
                                                                 const DesignBudget& budget) {
  Conductivity c = water_filling_conductivity(row_norms(q), budget);
  return {ScalarField{Support::OmegaDelta, std::move(c.kappa)}, c.value};
}

struct DesignSolution {
  TwoPointField flux;
  ScalarField conductivity;
  SolveReport report;
};

/// Approximately minimizes i^gamma(q) over antisymmetric q with D q = f.
///
/// Starts from the Tikhonov flux with beta = gamma / kappa_bar and alternates
/// the water-filling kappa update with the exact minimum-compliance flux for
/// fixed kappa. Certified by
///   (2V)^{-1} ||q||_{1,2}^2 <= objective <= (2V)^{-1} ||q_beta||_{1,2}^2 + beta/2 ||q_beta||^2.
inline DesignSolution solve_design_gamma(const ScalarField& f, const Kernel& kernel,
                                         const DesignBudget& budget, const SolverConfig& config = {}) {
  budget.validate();
  validate(config);
  if (!(budget.gamma > 0.0)) {
    throw ArgumentError("solve_design_gamma: gamma must be positive");
  }
  const Grid& grid = *kernel.grid;
  require_support(f, grid, Support::Omega, "solve_design_gamma");
  require_finite(f, "solve_design_gamma");
  const double volume = budget.volume;

  DesignSolution out;
  SolveReport& rep = out.report;
  if (std::all_of(f.values.begin(), f.values.end(), [](double x) { return x == 0.0; })) {
    out.flux = TwoPointField(kernel.pairs, SymmetryClass::Antisymmetric);
    out.conductivity = ScalarField::zeros(grid, Support::OmegaDelta);
    rep.converged = true;
    rep.breakdown["lower_cert"] = 0.0;
    rep.breakdown["upper_cert"] = 0.0;
    return out;
  }

  const double beta = budget.gamma / budget.kappa_bar;
  const FluxSolution tik = solve_tikhonov(f, kernel, beta, config);
  const double tik_n12 = norm_12(tik.flux);
  const double upper = tik_n12 * tik_n12 / (2.0 * volume) + 0.5 * beta * inner(tik.flux, tik.flux);

  TwoPointField q = tik.flux;
  Conductivity kappa = water_filling_conductivity(row_norms(q), budget);
  double objective = kappa.value;
  rep.history.push_back({0, objective, 0.0, detail::relative_residual(q, f, kernel)});
  const PairList& pairs = *kernel.pairs;
  const double w2 = pairs.cell_volume * pairs.cell_volume;
  bool settled = false;
  int it = 0;
  std::vector<double> cost(pairs.size());
  for (it = 1; it <= config.max_iters; ++it) {
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      const double ka = kappa.kappa[pairs.ends[e][0]];
      const double kb = kappa.kappa[pairs.ends[e][1]];
      cost[e] = (ka > 0.0 && kb > 0.0) ? w2 * (1.0 / ka + 1.0 / kb)
                                       : std::numeric_limits<double>::infinity();
    }
    TwoPointField q_new = MinimumEnergyFlux(kernel, cost).solve(f);
    Conductivity k_new = water_filling_conductivity(row_norms(q_new), budget);
    const double decrease = objective - k_new.value;
    if (decrease < -1e-12 * std::max(1.0, objective)) {
      // Half-steps are exact minimizations; an increase means round-off took over.
      break;
    }
    q = std::move(q_new);
    kappa = std::move(k_new);
    objective = kappa.value;
    rep.history.push_back({it, objective, 0.0, detail::relative_residual(q, f, kernel)});
    if (decrease <= config.tol_gap * std::max(1.0, objective)) {
      settled = true;
      break;
    }
  }
  const double n12 = norm_12(q);
  const double lower = n12 * n12 / (2.0 * volume);
  out.flux = std::move(q);
  out.conductivity = ScalarField{Support::OmegaDelta, std::move(kappa.kappa)};
  rep.optimal_value = objective;
  rep.dual_value = lower;
  rep.gap = (objective - lower) / std::max(1.0, std::abs(objective));
  rep.primal_residual = detail::relative_residual(out.flux, f, kernel);
  rep.iterations = std::min(it, config.max_iters);
  rep.breakdown["lower_cert"] = lower;
  rep.breakdown["upper_cert"] = upper;
  rep.breakdown["norm_12"] = n12;
  rep.breakdown["tikhonov_beta"] = beta;
  rep.breakdown["tikhonov_gap"] = tik.report.gap;
  const double slack = 10.0 * config.tol_gap * std::max(1.0, std::abs(objective));
  const bool sandwich = lower <= objective + slack && objective <= upper + slack;
  rep.converged = settled && tik.report.converged && sandwich &&
                  rep.primal_residual <= config.tol_primal;
  if (settled && !sandwich) {
    throw CertificateError("solve_design_gamma: certificate violated, lower " + format_real(lower) +
                         ", objective " + format_real(objective) + ", upper " + format_real(upper));
  }
  return out;
}

/// min_c sum w |Q + c| for the cumulative integral Q of a 1D source,
/// sampled at `resolution` midpoints per cell; c is a weighted median.
inline double local_reference_1d(const ScalarField& f, const Grid& grid, int resolution = 16) {
  if (grid.dimension != 1) {
    throw ArgumentError("local_reference_1d: one space dimension required");
  }
  require_support(f, grid, Support::Omega, "local_reference_1d");
  if (resolution < 1) {
    throw ArgumentError("local_reference_1d: resolution must be positive");
  }
  const double h = grid.spacing;
  const double sub = h / resolution;
  std::vector<double> samples;
  samples.reserve(f.size() * static_cast<std::size_t>(resolution));
  double base = 0.0;
  for (double fk : f.values) {
    for (int s = 0; s < resolution; ++s) {
      samples.push_back(base + fk * (s + 0.5) * sub);
    }
    base += fk * h;
  }
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];
  double value = 0.0;
  for (double q : samples) {
    value += std::abs(q - median);
  }
  return sub * value;
}

struct DeltaSweepRow {
  double delta = 0.0;
  double d_star = 0.0;
  double p_star_antisym = 0.0;
  double local_ref = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  SolveReport dual_report;
  SolveReport antisym_report;
  TwoPointField free_flux;
  std::shared_ptr<const Kernel> kernel;
};

/// One row per horizon: the non-antisymmetric dual value d*, the
/// antisymmetric primal value p*_a and, in 1D, the local reference.
inline std::vector<DeltaSweepRow> delta_sweep(const ScalarField& f, int dimension, int cells_per_side,
                                              const std::vector<double>& deltas,
                                              const SolverConfig& config = {}) {
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 1.0 / cells_per_side)) {
      throw ConfigurationError("delta_sweep: every delta must exceed the grid spacing");
    }
    if (k > 0 && !(deltas[k] < deltas[k - 1])) {
      throw ConfigurationError("delta_sweep: deltas must be strictly decreasing");
    }
  }
  std::vector<DeltaSweepRow> rows;
  for (double delta : deltas) {
    const Grid grid = build_grid(dimension, cells_per_side, delta);
    auto kernel = std::make_shared<const Kernel>(build_kernel(grid, delta));
    require_support(f, grid, Support::Omega, "delta_sweep");
    DeltaSweepRow row;
    row.delta = delta;
    row.kernel = kernel;
    // One free solve yields both the certified dual value and a feasible free flux.
    detail::EngineOutput dual = detail::flux_pdhg(f, *kernel, false, 0.0, config);
    FluxSolution anti = solve_basis_pursuit(f, *kernel, true, config);
    row.d_star = dual.report.dual_value;
    row.free_flux = std::move(dual.flux);
    row.p_star_antisym = anti.report.optimal_value;
    if (dimension == 1) {
      row.local_ref = local_reference_1d(f, grid);
    }
    row.converged = dual.report.converged && anti.report.converged;
    row.dual_report = std::move(dual.report);
    row.antisym_report = std::move(anti.report);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace nlflux
