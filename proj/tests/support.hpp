#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "nlflux/nlflux.hpp"

namespace nlflux::testing {

inline const nlohmann::json& fixtures() {
  static const nlohmann::json all = [] {
    std::ifstream in(std::string(NLFLUX_FIXTURE_DIR) + "/oracle_fixtures.json");
    if (!in) {
      throw std::runtime_error("oracle_fixtures.json not found");
    }
    return nlohmann::json::parse(in);
  }();
  return all;
}

inline const nlohmann::json& fixture(const std::string& name) {
  for (const auto& c : fixtures()) {
    if (c.at("case") == name) {
      return c;
    }
  }
  throw std::runtime_error("missing fixture " + name);
}

inline ScalarField random_scalar(const Grid& grid, Support s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ScalarField u = ScalarField::zeros(grid, s);
  for (double& x : u.values) {
    x = normal(rng);
  }
  return u;
}

inline TwoPointField random_pairs(const Kernel& k, SymmetryClass c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  TwoPointField q(k.pairs, c);
  for (double& x : q.data()) {
    x = normal(rng);
  }
  return q;
}

/// p(x, x') = -sin(pi x) + sin(pi x').
inline TwoPointField sine_field(const Grid& grid, const Kernel& kernel) {
  const double pi = std::acos(-1.0);
  return TwoPointField::from_function(kernel.pairs, SymmetryClass::General, [&](std::size_t a, std::size_t b) {
    return -std::sin(pi * grid.centers[a][0]) + std::sin(pi * grid.centers[b][0]);
  });
}

struct Horizon1D {
  Grid grid;
  Kernel kernel;
  ScalarField ones;
  explicit Horizon1D(int n = 16, double delta = 0.25)
      : grid(build_grid(1, n, delta)),
        kernel(build_kernel(grid, delta)),
        ones(ScalarField::constant(grid, Support::Omega, 1.0)) {}
};

}  // namespace nlflux::testing
