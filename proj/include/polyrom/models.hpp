#pragma once

#include "polyrom/polysys.hpp"

#include <string>
#include <utility>
#include <vector>

namespace polyrom {

/// N interior points on (0, L); boundary values live on ghost points x = 0 and x = L.
struct GridSpec {
  double length = 1.0;
  Index n_points = 1024;

  double spacing() const { return length / static_cast<double>(n_points + 1); }
  /// Coordinate of interior point i (0-based).
  double node(Index i) const { return static_cast<double>(i + 1) * spacing(); }
  void validate() const;
};

struct LiftedSystemLayout {
  std::vector<Index> block_sizes;
  std::vector<std::string> variable_names;

  Index total() const;
  Index offset(std::size_t block) const;
};

/// Viscous Burgers, mu = (mu_1 left boundary value, mu_2 viscosity), u(t) = [mu_1].
PolynomialSystem build_burgers(const GridSpec& grid);

/// Heat equation with cubic reaction, mu = (a, b), u(t) = [a sin 2 pi t, b sin 4 pi t].
PolynomialSystem build_heat_cubic(const GridSpec& grid);

/// Quadratic lifting of the heat equation with state [q; w], w = q^2.
std::pair<PolynomialSystem, LiftedSystemLayout> build_heat_lifted(const GridSpec& grid);

/// Builds "burgers", "heat-cubic" or "heat-lifted".
PolynomialSystem build_model(const std::string& name, const GridSpec& grid);

Vector lift_state(const Vector& q);
/// First half of a lifted state.
Vector restrict_state(const Vector& x);

double heat_initial_profile(double x, double length);
/// Input profiles f_1 (k = 0) and f_2 (k = 1).
double heat_input_profile(int k, double x, double length);

}  // namespace polyrom
