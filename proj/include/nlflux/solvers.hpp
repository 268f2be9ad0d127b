#pragma once

// Primal-dual hybrid gradient solvers for the sparse-flux problems
//
//   min ||q||_{1,2,h} (+ beta/2 ||q||_{2,h}^2)  s.t.  D q = f,  q in S,
//
// with S all two-point fields or the antisymmetric ones. The norm enters
// through its conjugate (a dual variable y in the unit ||.||_{inf,2} ball),
// the constraint through a temperature multiplier v:
//
//   min_{q in S} max_{y, v} <y, q> + <v, f - D q>  (+ beta/2 ||q||^2).
//
// Every check produces a primal value on a feasibility-corrected flux and a
// dual value on a feasible dual point, so both are certified bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlflux/calculus.hpp"
#include "nlflux/error.hpp"
#include "nlflux/fields.hpp"
#include "nlflux/geometry.hpp"
#include "nlflux/mixed_norms.hpp"

namespace nlflux {

struct SolverConfig {
  int max_iters = 200000;
  double tol_primal = 1e-8;
  double tol_gap = 1e-7;
  /// Dual step sigma_y = step_ratio, primal step tau = 1 / (2 step_ratio).
  double step_ratio = 1.0;
  double over_relaxation = 1.0;
  std::uint64_t seed = 0;
  /// Iterations between certificate evaluations.
  int check_every = 50;
};

inline void validate(const SolverConfig& c) {
  if (c.max_iters < 1) {
    throw ConfigurationError("solver: max_iters must be at least 1");
  }
  if (!(c.tol_primal > 0.0) || !(c.tol_gap > 0.0)) {
    throw ConfigurationError("solver: tolerances must be positive");
  }
  if (!(c.step_ratio > 0.0) || !std::isfinite(c.step_ratio)) {
    throw ConfigurationError("solver: step_ratio must be positive and finite");
  }
  if (!(c.over_relaxation >= 0.0 && c.over_relaxation <= 1.0)) {
    throw ConfigurationError("solver: over_relaxation must lie in [0, 1]");
  }
  if (c.check_every < 1) {
    throw ConfigurationError("solver: check_every must be at least 1");
  }
}

struct IterateSnapshot {
  int iteration = 0;
  double primal = 0.0;
  double dual = 0.0;
  double residual = 0.0;
};

struct SolveReport {
  double optimal_value = 0.0;
  double dual_value = 0.0;
  /// (optimal_value - dual_value) / max(1, |optimal_value|).
  double gap = 0.0;
  double primal_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::map<std::string, double> breakdown;
  std::vector<IterateSnapshot> history;
};

struct FluxSolution {
  TwoPointField flux;
  SolveReport report;
};

struct TemperatureSolution {
  ScalarField temperature;
  SolveReport report;
};

namespace detail {

/// dst += s * src, dst General, src of any class on the same pairs.
inline void add_scaled(TwoPointField& dst, double s, const TwoPointField& src) {
  auto d = dst.data();
  for (std::size_t e = 0; e < src.num_pairs(); ++e) {
    d[2 * e] += s * src.forward(e);
    d[2 * e + 1] += s * src.backward(e);
  }
}

/// a + s * b in the layout of a; b is projected into a's class.
inline TwoPointField combine(const TwoPointField& a, double s, const TwoPointField& b) {
  if (a.symmetry() == SymmetryClass::General) {
    TwoPointField out = a;
    add_scaled(out, s, b);
    return out;
  }
  TwoPointField bp = b.symmetry() == a.symmetry() ? b : symmetry_project(b.as_general(), a.symmetry());
  TwoPointField out = a;
  auto o = out.data();
  auto v = bp.data();
  for (std::size_t k = 0; k < o.size(); ++k) {
    o[k] += s * v[k];
  }
  return out;
}

inline double weighted_l2(const ScalarField& u, const Grid& grid) {
  return std::sqrt(inner(u, u, grid));
}

inline double relative_residual(const TwoPointField& q, const ScalarField& f, const Kernel& kernel) {
  const Grid& grid = *kernel.grid;
  ScalarField r = nonlocal_divergence(q, kernel);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.values[i] -= f.values[i];
  }
  return weighted_l2(r, grid) / std::max(1.0, weighted_l2(f, grid));
}

struct EngineOutput {
  TwoPointField flux;
  ScalarField temperature;
  SolveReport report;
};

inline void require_surjective(const Kernel& kernel, const char* what) {
  if (kernel.grid->mode == InteractionMode::Full) {
    throw ConfigurationError(std::string(what) +
                             ": the divergence is not onto in full-interaction mode, use a horizon grid");
  }
}

inline EngineOutput flux_pdhg(const ScalarField& f, const Kernel& kernel, bool antisymmetric,
                              double beta, const SolverConfig& config) {
  validate(config);
  const Grid& grid = *kernel.grid;
  require_support(f, grid, Support::Omega, "solver");
  require_finite(f, "solver");
  require_surjective(kernel, "solver");

  const SymmetryClass cls = antisymmetric ? SymmetryClass::Antisymmetric : SymmetryClass::General;
  const double norm_d = operator_norm_estimate(kernel, antisymmetric, config.seed);
  const double rho = config.step_ratio;
  const double sigma_y = rho;
  const double sigma_u = rho / (norm_d * norm_d);
  const double tau = 1.0 / (2.0 * rho);
  const double theta = config.over_relaxation;
  const MinimumEnergyFlux correction = MinimumEnergyFlux::least_norm(kernel);

  TwoPointField q(kernel.pairs, cls);
  TwoPointField q_bar = q;
  TwoPointField y(kernel.pairs, SymmetryClass::General);
  ScalarField v = ScalarField::zeros(grid, Support::Omega);

  EngineOutput out{q, v, {}};
  SolveReport& rep = out.report;
  rep.breakdown["operator_norm"] = norm_d;
  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = -std::numeric_limits<double>::infinity();

  auto objective = [&](const TwoPointField& w, double& n12, double& quad) {
    n12 = norm_12(w);
    quad = beta > 0.0 ? 0.5 * beta * inner(w, w) : 0.0;
    return n12 + quad;
  };

  auto certify = [&](int iteration) {
    const double residual = relative_residual(q, f, kernel);
    ScalarField defect = nonlocal_divergence(q, kernel);
    for (std::size_t i = 0; i < defect.size(); ++i) {
      defect.values[i] = f.values[i] - defect.values[i];
    }
    const TwoPointField qc = combine(q, 1.0, correction.solve(defect));
    double n12 = 0.0;
    double quad = 0.0;
    const double primal = objective(qc, n12, quad);

    const TwoPointField gv = nonlocal_gradient(v, kernel);
    const double lv = inner(f, v, grid);
    double dual = 0.0;
    double scale = 1.0;
    if (beta > 0.0) {
      TwoPointField z = y;
      add_scaled(z, 1.0, gv);
      if (antisymmetric) {
        z = symmetry_project(z, SymmetryClass::Antisymmetric);
      }
      dual = lv - inner(z, z) / (2.0 * beta);
    } else {
      // Feasible dual point: -G v plus a symmetric shift, rescaled into the unit ball.
      TwoPointField w(kernel.pairs, SymmetryClass::General);
      add_scaled(w, -1.0, gv);
      if (antisymmetric) {
        add_scaled(w, 1.0, symmetry_project(y, SymmetryClass::Symmetric));
      }
      const double c = norm_inf2(w);
      if (lv > 0.0 && c > 0.0) {
        dual = lv / c;
        scale = 1.0 / c;
      } else {
        scale = 0.0;
      }
    }
    if (primal < best_primal) {
      best_primal = primal;
      out.flux = qc;
      rep.breakdown["norm_12"] = n12;
      if (beta > 0.0) {
        rep.breakdown["half_beta_norm2sq"] = quad;
      }
    }
    if (dual > best_dual) {
      best_dual = dual;
      out.temperature = v;
      for (double& x : out.temperature.values) {
        x *= scale;
      }
    }
    rep.optimal_value = best_primal;
    rep.dual_value = best_dual;
    rep.gap = (best_primal - best_dual) / std::max(1.0, std::abs(best_primal));
    rep.primal_residual = residual;
    rep.iterations = iteration;
    rep.history.push_back({iteration, best_primal, best_dual, residual});
    rep.converged = rep.gap <= config.tol_gap && residual <= config.tol_primal;
    return rep.converged;
  };

  if (certify(0)) {
    return out;
  }
  for (int it = 1; it <= config.max_iters; ++it) {
    // Dual ascent on the norm conjugate and on the temperature.
    add_scaled(y, sigma_y, q_bar);
    y = project_ball_inf2(y, 1.0);
    ScalarField dq = nonlocal_divergence(q_bar, kernel);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v.values[i] += sigma_u * (f.values[i] - dq.values[i]);
    }
    // Primal descent along y + G v, projected onto the flux class.
    TwoPointField g = y;
    add_scaled(g, 1.0, nonlocal_gradient(v, kernel));
    TwoPointField q_new = combine(q, -tau, g);
    if (beta > 0.0) {
      q_new *= 1.0 / (1.0 + tau * beta);
    }
    q_bar = q_new;
    q_bar *= 1.0 + theta;
    q_bar = combine(q_bar, -theta, q);
    q = std::move(q_new);
    if (it % config.check_every == 0 || it == config.max_iters) {
      if (certify(it)) {
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

/// min ||q||_{1,2,h} s.t. D q = f, optionally over antisymmetric q.
/// Non-convergence is reported, not thrown.
inline FluxSolution solve_basis_pursuit(const ScalarField& f, const Kernel& kernel,
                                        bool antisymmetric, const SolverConfig& config = {}) {
  auto out = detail::flux_pdhg(f, kernel, antisymmetric, 0.0, config);
  return {std::move(out.flux), std::move(out.report)};
}

/// min ||q||_{1,2,h} + beta/2 ||q||_{2,h}^2 s.t. D q = f over antisymmetric q.
inline FluxSolution solve_tikhonov(const ScalarField& f, const Kernel& kernel, double beta,
                                   const SolverConfig& config = {}) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ArgumentError("solve_tikhonov: beta must be positive and finite");
  }
  auto out = detail::flux_pdhg(f, kernel, true, beta, config);
  return {std::move(out.flux), std::move(out.report)};
}

/// max <f, u>_h s.t. ||G u||_{inf,2,h} <= 1. Here optimal_value is the
/// certified value of the returned feasible u and dual_value is the upper
/// bound from the flux side.
inline TemperatureSolution solve_dual_temperature(const ScalarField& f, const Kernel& kernel,
                                                  const SolverConfig& config = {}) {
  auto out = detail::flux_pdhg(f, kernel, false, 0.0, config);
  SolveReport rep = std::move(out.report);
  std::swap(rep.optimal_value, rep.dual_value);
  rep.gap = (rep.dual_value - rep.optimal_value) / std::max(1.0, std::abs(rep.dual_value));
  for (auto& s : rep.history) {
    std::swap(s.primal, s.dual);
  }
  rep.breakdown["constraint_norm_inf2"] = norm_inf2(nonlocal_gradient(out.temperature, kernel));
  return {std::move(out.temperature), std::move(rep)};
}

/// sup { <p, q>_h : ||q||_{1,2,h} <= 1 } = ||p||_{inf,2,h}.
inline double dual_norm_free(const TwoPointField& p) { return norm_inf2(p); }

/// A maximizer of the free problem: all mass on the heaviest row.
inline TwoPointField dual_norm_free_maximizer(const TwoPointField& p) {
  const RowNormProfile r = row_norms(p);
  TwoPointField q(p.pairs_ptr(), SymmetryClass::General);
  if (r.row.empty() || r.norm_inf2() == 0.0) {
    return q;
  }
  const auto top = static_cast<std::uint32_t>(
      std::max_element(r.row.begin(), r.row.end()) - r.row.begin());
  const double scale = 1.0 / (r.weight * r.row[top]);
  const PairList& pairs = p.pairs();
  auto v = q.data();
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (pairs.ends[e][0] == top) {
      v[2 * e] = scale * p.forward(e);
    } else if (pairs.ends[e][1] == top) {
      v[2 * e + 1] = scale * p.backward(e);
    }
  }
  return q;
}

struct DualNormResult {
  double value = 0.0;
  TwoPointField maximizer;
  /// Bounds from the quotient form min_s ||P_a p + s||_{inf,2,h}.
  double upper_bound = 0.0;
  double lower_bound = 0.0;
  int iterations = 0;
  int ascent_iterations = 0;
  bool converged = false;
};

/// Projection onto { ||q||_{1,2,h} <= 1 } and the antisymmetric subspace by
/// Dykstra's alternation. The result is antisymmetric.
inline TwoPointField project_ball_12_antisymmetric(const TwoPointField& x0, double radius,
                                                   int max_sweeps = 200, double tol = 1e-13) {
  TwoPointField x = x0.as_general();
  TwoPointField c(x.pairs_ptr(), SymmetryClass::General);
  TwoPointField d(x.pairs_ptr(), SymmetryClass::General);
  TwoPointField a = symmetry_project(x, SymmetryClass::Antisymmetric);
  for (int k = 0; k < max_sweeps; ++k) {
    TwoPointField b = project_ball_12(x + c, radius);
    c = x + c - b;
    TwoPointField z = b + d;
    TwoPointField a_new = symmetry_project(z, SymmetryClass::Antisymmetric);
    d = z - a_new.as_general();
    const double change = norm_2(a_new - a);
    a = std::move(a_new);
    x = a.as_general();
    if (change <= tol * std::max(1.0, norm_2(a))) {
      break;
    }
  }
  return a;
}

/// sup { <p, q>_h : q antisymmetric, ||q||_{1,2,h} <= 1 }.
///
/// The quotient form is solved first by a primal-dual iteration whose two
/// certificates bracket the value; then projected ascent q <- P(q + t p)
/// onto ball and subspace, warm-started at the best feasible iterate, is run
/// until it reaches the bracket. The best feasible value is returned.
inline DualNormResult dual_norm_antisym(const TwoPointField& p, const SolverConfig& config = {}) {
  validate(config);
  DualNormResult res;
  const TwoPointField pa = symmetry_project(p.as_general(), SymmetryClass::Antisymmetric);
  res.maximizer = TwoPointField(p.pairs_ptr(), SymmetryClass::Antisymmetric);
  const double scale_p = norm_inf2(pa);
  if (scale_p == 0.0) {
    res.converged = true;
    return res;
  }

  const double tau = 0.99 * config.step_ratio;
  const double sigma = 0.99 / config.step_ratio;
  const double theta = config.over_relaxation;
  TwoPointField q(p.pairs_ptr(), SymmetryClass::Antisymmetric);
  TwoPointField q_bar = q;
  TwoPointField y(p.pairs_ptr(), SymmetryClass::General);
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  TwoPointField feasible(p.pairs_ptr(), SymmetryClass::Antisymmetric);
  int it = 0;
  for (it = 1; it <= config.max_iters; ++it) {
    TwoPointField w = y;
    detail::add_scaled(w, sigma, q_bar);
    TwoPointField scaled = w;
    scaled *= 1.0 / sigma;
    y = w;
    detail::add_scaled(y, -sigma, project_ball_12(scaled, 1.0));
    TwoPointField q_new = q;
    auto qn = q_new.data();
    const TwoPointField ya = symmetry_project(y, SymmetryClass::Antisymmetric);
    auto yv = ya.data();
    auto pv = pa.data();
    for (std::size_t k = 0; k < qn.size(); ++k) {
      qn[k] -= tau * (yv[k] - pv[k]);
    }
    q_bar = q_new;
    q_bar *= 1.0 + theta;
    q_bar = detail::combine(q_bar, -theta, q);
    q = std::move(q_new);
    if (it % config.check_every == 0 || it == config.max_iters) {
      const double n = std::max(1.0, norm_12(q));
      const double candidate = inner(pa, q) / n;
      if (candidate > lower) {
        lower = candidate;
        feasible = q;
        feasible *= 1.0 / n;
      }
      TwoPointField shifted = symmetry_project(y, SymmetryClass::Symmetric).as_general();
      detail::add_scaled(shifted, 1.0, pa);
      upper = std::min(upper, norm_inf2(shifted));
      if ((upper - lower) / std::max(1.0, upper) <= config.tol_gap) {
        res.converged = true;
        break;
      }
    }
  }
  res.iterations = std::min(it, config.max_iters);
  res.upper_bound = upper;
  res.lower_bound = lower;

  // Projected ascent on the linear objective, from the best feasible
  // point of the first stage.
  const double step = 10.0 / scale_p;
  TwoPointField x = feasible;
  double ascent = lower;
  TwoPointField best = feasible;
  int k = 0;
  const int ascent_cap = std::max(1, config.max_iters / 100);
  for (k = 1; k <= ascent_cap; ++k) {
    TwoPointField moved = detail::combine(x, step, pa);
    x = project_ball_12_antisymmetric(moved, 1.0);
    const double n = norm_12(x);
    const double value = inner(pa, x) / std::max(1.0, n);
    if (value > ascent) {
      ascent = value;
      best = x;
      best *= 1.0 / std::max(1.0, n);
    }
    if (ascent >= upper - config.tol_gap * std::max(1.0, upper)) {
      break;
    }
  }
  res.ascent_iterations = std::min(k, ascent_cap);
  res.value = ascent;
  res.maximizer = std::move(best);
  if (std::abs(ascent - upper) > 10.0 * config.tol_gap * std::max(1.0, upper)) {
    throw CertificateError("dual_norm_antisym: projected ascent value " + format_real(ascent) +
                         " disagrees with quotient bound " + format_real(upper) +
                         " (quotient lower bound " + format_real(lower) + ")");
  }
  return res;
}

}  // namespace nlflux
