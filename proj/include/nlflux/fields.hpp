#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlflux/error.hpp"
#include "nlflux/geometry.hpp"

namespace nlflux {

enum class Support { Omega, OmegaDelta };

enum class SymmetryClass { General, Antisymmetric, Symmetric };

inline const char* to_string(SymmetryClass c) {
  switch (c) {
    case SymmetryClass::General:
      return "general";
    case SymmetryClass::Antisymmetric:
      return "antisymmetric";
    case SymmetryClass::Symmetric:
      return "symmetric";
  }
  return "?";
}

/// Cell values on Omega or Omega_delta. Fields on Omega are read as zero on
/// the collar by every nonlocal operator.
struct ScalarField {
  Support support = Support::Omega;
  std::vector<double> values;

  static ScalarField zeros(const Grid& grid, Support support) {
    return {support, std::vector<double>(cell_count(grid, support), 0.0)};
  }
  static ScalarField constant(const Grid& grid, Support support, double value) {
    return {support, std::vector<double>(cell_count(grid, support), value)};
  }
  /// Samples fn at the cell centers of the requested support.
  static ScalarField sample(const Grid& grid, Support support,
                            const std::function<double(const Point&)>& fn) {
    ScalarField out = zeros(grid, support);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      const std::size_t cell = support == Support::Omega ? grid.omega_cells[i] : i;
      out.values[i] = fn(grid.centers[cell]);
    }
    return out;
  }

  static std::size_t cell_count(const Grid& grid, Support support) {
    return support == Support::Omega ? grid.omega_count() : grid.omega_delta_count();
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

inline void require_support(const ScalarField& f, const Grid& grid, Support support,
                            const char* what) {
  if (f.support != support || f.size() != ScalarField::cell_count(grid, support)) {
    throw ArgumentError(std::string(what) + ": scalar field support does not match the grid");
  }
}

inline void require_finite(const ScalarField& f, const char* what) {
  for (double v : f.values) {
    if (!std::isfinite(v)) {
      throw ArgumentError(std::string(what) + ": non-finite scalar field entry");
    }
  }
}

/// Weighted inner product sum_i h^n u_i v_i.
inline double inner(const ScalarField& u, const ScalarField& v, const Grid& grid) {
  if (u.support != v.support || u.size() != v.size()) {
    throw ArgumentError("inner: scalar fields live on different supports");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += u.values[i] * v.values[i];
  }
  return grid.cell_volume() * s;
}

/// n-vector per Omega_delta cell, stored cell-major.
struct VectorField {
  int dimension = 1;
  std::vector<double> values;

  std::size_t cells() const { return values.size() / static_cast<std::size_t>(dimension); }
  std::span<const double> at(std::size_t cell) const {
    return {values.data() + cell * dimension, static_cast<std::size_t>(dimension)};
  }
  double magnitude(std::size_t cell) const {
    double s = 0.0;
    for (double c : at(cell)) {
      s += c * c;
    }
    return std::sqrt(s);
  }
};

/// Weighted L^1 norm sum_i h^n |v(x_i)|.
inline double norm_l1(const VectorField& v, double cell_volume) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.cells(); ++i) {
    s += v.magnitude(i);
  }
  return cell_volume * s;
}

/// Values on ordered interacting pairs (i, j).
///
/// Each unordered pair e = (a, b), a < b, of the pair list carries either
/// two independent values q(a,b), q(b,a) (General) or a single value v with
/// q(a,b) = v and q(b,a) = -v (Antisymmetric) or +v (Symmetric). The mirror
/// value of a constrained class is materialized on read, so the symmetry
/// relation holds bit-for-bit.
class TwoPointField {
 public:
  TwoPointField() = default;
  TwoPointField(std::shared_ptr<const PairList> pairs, SymmetryClass symmetry)
      : pairs_(std::move(pairs)), symmetry_(symmetry) {
    values_.assign(pairs_->size() * stride(), 0.0);
  }

  /// Evaluates fn(a, b) on both orientations of every pair. For constrained
  /// classes only the forward orientation is sampled.
  static TwoPointField from_function(std::shared_ptr<const PairList> pairs,
                                     SymmetryClass symmetry,
                                     const std::function<double(std::size_t, std::size_t)>& fn) {
    TwoPointField q(std::move(pairs), symmetry);
    for (std::size_t e = 0; e < q.num_pairs(); ++e) {
      const auto [a, b] = q.pairs_->ends[e];
      if (symmetry == SymmetryClass::General) {
        q.values_[2 * e] = fn(a, b);
        q.values_[2 * e + 1] = fn(b, a);
      } else {
        q.values_[e] = fn(a, b);
      }
    }
    return q;
  }

  const PairList& pairs() const { return *pairs_; }
  const std::shared_ptr<const PairList>& pairs_ptr() const { return pairs_; }
  SymmetryClass symmetry() const { return symmetry_; }
  std::size_t num_pairs() const { return pairs_ ? pairs_->size() : 0; }
  std::size_t stride() const { return symmetry_ == SymmetryClass::General ? 2 : 1; }

  /// q(a, b) for pair e = (a, b).
  double forward(std::size_t e) const { return values_[e * stride()]; }
  /// q(b, a) for pair e = (a, b).
  double backward(std::size_t e) const {
    switch (symmetry_) {
      case SymmetryClass::General:
        return values_[2 * e + 1];
      case SymmetryClass::Antisymmetric:
        return -values_[e];
      case SymmetryClass::Symmetric:
        return values_[e];
    }
    return 0.0;
  }

  /// Raw storage: interleaved (forward, backward) for General, one value per
  /// unordered pair otherwise.
  std::span<double> data() { return values_; }
  std::span<const double> data() const { return values_; }

  bool same_layout(const TwoPointField& other) const {
    return pairs_ == other.pairs_ && symmetry_ == other.symmetry_;
  }

  TwoPointField as_general() const {
    if (symmetry_ == SymmetryClass::General) {
      return *this;
    }
    TwoPointField g(pairs_, SymmetryClass::General);
    for (std::size_t e = 0; e < num_pairs(); ++e) {
      g.values_[2 * e] = forward(e);
      g.values_[2 * e + 1] = backward(e);
    }
    return g;
  }

  TwoPointField& operator+=(const TwoPointField& other) {
    require_layout(other, "operator+=");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      values_[k] += other.values_[k];
    }
    return *this;
  }
  TwoPointField& operator-=(const TwoPointField& other) {
    require_layout(other, "operator-=");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      values_[k] -= other.values_[k];
    }
    return *this;
  }
  TwoPointField& operator*=(double s) {
    for (double& v : values_) {
      v *= s;
    }
    return *this;
  }

  friend TwoPointField operator+(TwoPointField a, const TwoPointField& b) { return a += b; }
  friend TwoPointField operator-(TwoPointField a, const TwoPointField& b) { return a -= b; }
  friend TwoPointField operator*(double s, TwoPointField a) { return a *= s; }

 private:
  void require_layout(const TwoPointField& other, const char* what) const {
    if (!same_layout(other)) {
      throw ArgumentError(std::string(what) + ": two-point fields differ in pair list or class");
    }
  }

  std::shared_ptr<const PairList> pairs_;
  SymmetryClass symmetry_ = SymmetryClass::General;
  std::vector<double> values_;
};

inline void require_pairs(const TwoPointField& q, const Kernel& kernel, const char* what) {
  if (q.pairs_ptr() != kernel.pairs) {
    throw ArgumentError(std::string(what) + ": two-point field is not on the kernel's pair list");
  }
}

/// Weighted pairing sum over ordered pairs of h^{2n} p(i,j) q(i,j).
inline double inner(const TwoPointField& p, const TwoPointField& q) {
  if (p.pairs_ptr() != q.pairs_ptr()) {
    throw ArgumentError("inner: two-point fields live on different pair lists");
  }
  double s = 0.0;
  for (std::size_t e = 0; e < p.num_pairs(); ++e) {
    s += p.forward(e) * q.forward(e) + p.backward(e) * q.backward(e);
  }
  const double w = p.pairs().cell_volume;
  return w * w * s;
}

/// Largest |q(i,j) + q(j,i)| over all pairs; zero bit-for-bit for
/// antisymmetric storage.
inline double antisymmetry_defect(const TwoPointField& q) {
  double m = 0.0;
  for (std::size_t e = 0; e < q.num_pairs(); ++e) {
    m = std::max(m, std::abs(q.forward(e) + q.backward(e)));
  }
  return m;
}

}  // namespace nlflux
