#pragma once

// Weighted mixed-exponent norms on two-point fields and the proximal maps
// and projections built on them. Row i of a field collects q(i, j) over all
// partners j; its weighted size is r(x_i) = (sum_j h^n q(i,j)^2)^{1/2}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "nlflux/error.hpp"
#include "nlflux/fields.hpp"

namespace nlflux {

/// Per-row inner norms and the outer weight h^n.
struct RowNormProfile {
  std::vector<double> row;
  double weight = 0.0;

  double norm_12() const { return weight * std::accumulate(row.begin(), row.end(), 0.0); }
  double norm_inf2() const {
    return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
  }
};

inline RowNormProfile row_norms(const TwoPointField& q) {
  const PairList& pairs = q.pairs();
  std::vector<double> r2(pairs.cell_count, 0.0);
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const double f = q.forward(e);
    const double b = q.backward(e);
    r2[pairs.ends[e][0]] += f * f;
    r2[pairs.ends[e][1]] += b * b;
  }
  RowNormProfile profile{std::move(r2), pairs.cell_volume};
  for (double& r : profile.row) {
    r = std::sqrt(profile.weight * r);
  }
  return profile;
}

/// ||q||_{1,2,h} = sum_i h^n r(x_i).
inline double norm_12(const TwoPointField& q) { return row_norms(q).norm_12(); }

/// ||q||_{inf,2,h} = max_i r(x_i).
inline double norm_inf2(const TwoPointField& q) { return row_norms(q).norm_inf2(); }

/// ||q||_{2,h} = (sum over ordered pairs h^{2n} q^2)^{1/2}.
inline double norm_2(const TwoPointField& q) { return std::sqrt(inner(q, q)); }

/// Multiplies row i by scale[i]. The result is General unless every pair
/// sees equal scales on both of its rows.
inline TwoPointField scale_rows(const TwoPointField& q, std::span<const double> scale) {
  const PairList& pairs = q.pairs();
  TwoPointField out(q.pairs_ptr(), SymmetryClass::General);
  auto v = out.data();
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    v[2 * e] = q.forward(e) * scale[pairs.ends[e][0]];
    v[2 * e + 1] = q.backward(e) * scale[pairs.ends[e][1]];
  }
  return out;
}

/// Block soft thresholding: row i scaled by max(1 - step / r(x_i), 0).
/// Minimizes step ||.||_{1,2,h} + 1/2 ||. - q||_{2,h}^2.
inline TwoPointField prox_norm12(const TwoPointField& q, double step) {
  if (!(step > 0.0)) {
    throw ArgumentError("prox_norm12: step must be positive");
  }
  const RowNormProfile r = row_norms(q);
  std::vector<double> scale(r.row.size());
  for (std::size_t i = 0; i < scale.size(); ++i) {
    scale[i] = r.row[i] > step ? 1.0 - step / r.row[i] : 0.0;
  }
  return scale_rows(q, scale);
}

/// Euclidean projection of a nonnegative vector onto
/// { x >= 0 : weight * sum x <= radius } by sort and threshold.
inline std::vector<double> project_weighted_l1_ball(std::span<const double> x, double weight,
                                                    double radius) {
  std::vector<double> out(x.begin(), x.end());
  const double total = weight * std::accumulate(x.begin(), x.end(), 0.0);
  if (total <= radius) {
    return out;
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Find theta with weight * sum max(x - theta, 0) = radius.
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - radius / weight) / static_cast<double>(k + 1);
    const bool last = k + 1 == sorted.size();
    if (last || sorted[k + 1] <= candidate) {
      theta = candidate;
      break;
    }
  }
  for (double& v : out) {
    v = std::max(v - theta, 0.0);
  }
  return out;
}

/// Weighted-l2 projection onto { ||.||_{1,2,h} <= radius }.
inline TwoPointField project_ball_12(const TwoPointField& q, double radius) {
  if (!(radius > 0.0)) {
    throw ArgumentError("project_ball_12: radius must be positive");
  }
  const RowNormProfile r = row_norms(q);
  if (r.norm_12() <= radius) {
    return q;
  }
  const std::vector<double> target = project_weighted_l1_ball(r.row, r.weight, radius);
  std::vector<double> scale(r.row.size(), 0.0);
  for (std::size_t i = 0; i < scale.size(); ++i) {
    if (r.row[i] > 0.0) {
      scale[i] = target[i] / r.row[i];
    }
  }
  return scale_rows(q, scale);
}

/// Rows with r > radius rescaled onto r = radius; others untouched.
inline TwoPointField project_ball_inf2(const TwoPointField& p, double radius) {
  if (!(radius > 0.0)) {
    throw ArgumentError("project_ball_inf2: radius must be positive");
  }
  const RowNormProfile r = row_norms(p);
  if (r.norm_inf2() <= radius) {
    return p;
  }
  std::vector<double> scale(r.row.size(), 1.0);
  for (std::size_t i = 0; i < scale.size(); ++i) {
    if (r.row[i] > radius) {
      scale[i] = radius / r.row[i];
    }
  }
  return scale_rows(p, scale);
}

}  // namespace nlflux
