#include "polyrom/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polyrom {

namespace {

using Triplets = std::vector<Eigen::Triplet<double, std::int64_t>>;

SparseMatrix from_triplets(Index rows, Index cols, const Triplets& t) {
  return sparse_from_triplets(rows, cols, t);
}

// [1, -2, 1] / dx^2 on the interior points, homogeneous ghosts.
Triplets laplacian_triplets(Index n, double dx, Index row_offset = 0, Index col_offset = 0,
                            double scale = 1.0) {
  const double c = scale / (dx * dx);
  Triplets t;
  for (Index i = 0; i < n; ++i) {
    if (i > 0) t.emplace_back(row_offset + i, col_offset + i - 1, c);
    t.emplace_back(row_offset + i, col_offset + i, -2.0 * c);
    if (i + 1 < n) t.emplace_back(row_offset + i, col_offset + i + 1, c);
  }
  return t;
}

constexpr double kHeatDiffusion = 0.005;

}  // namespace

void GridSpec::validate() const {
  if (n_points < 3) throw DimensionError("grid needs at least 3 interior points");
  if (!(length > 0.0)) throw DimensionError("grid length must be positive");
}

Index LiftedSystemLayout::total() const {
  Index s = 0;
  for (Index b : block_sizes) s += b;
  return s;
}

Index LiftedSystemLayout::offset(std::size_t block) const {
  Index s = 0;
  for (std::size_t b = 0; b < block && b < block_sizes.size(); ++b) s += block_sizes[b];
  return s;
}

PolynomialSystem build_burgers(const GridSpec& grid) {
  grid.validate();
  const Index n = grid.n_points;
  const double dx = grid.spacing();
  PolynomialSystem sys = make_empty_system(n, 1, 2);
  sys.name = "burgers";

  sys.op_A.add_term(AffineScalar::component(1), from_triplets(n, n, laplacian_triplets(n, dx)));

  // -w_i (w_{i+1} - w_{i-1}) / (2 dx)
  Triplets f;
  const double h = 1.0 / (2.0 * dx);
  for (Index i = 0; i < n; ++i) {
    if (i + 1 < n) f.emplace_back(i, i * n + (i + 1), -h);
    if (i > 0) f.emplace_back(i, i * n + (i - 1), h);
  }
  sys.op_F.add_term(AffineScalar::constant(1.0), from_triplets(n, n * n, f));

  // Left ghost w = mu_1 enters diffusion (B, scaled by mu_2) and advection (N).
  sys.op_B.add_term(AffineScalar::component(1), from_triplets(n, 1, {{0, 0, 1.0 / (dx * dx)}}));
  sys.op_N.add_term(AffineScalar::constant(1.0), from_triplets(n, n, {{0, 0, h}}));

  sys.input_signal = [](double, const ParamVector& mu) {
    Vector u(1);
    u(0) = mu.at(0);
    return u;
  };
  sys.initial_state = [n](const ParamVector&) { return Vector::Zero(n); };
  compute_stencil(sys);
  sys.validate();
  return sys;
}

double heat_initial_profile(double x, double length) {
  const double s = x / length;
  return s * (1.0 - s) *
             (6.0 * (1.0 - s) * (1.0 - s) * std::exp(-s) - 10.0 * std::exp(s) * std::sin(s / 6.0)) +
         s;
}

double heat_input_profile(int k, double x, double length) {
  const double center = k == 0 ? 0.25 : 0.75;
  const double d = x / length - center;
  return 1.0 / (1.0 + 100.0 * d * d);
}

namespace {

Vector heat_input(double t, const ParamVector& mu) {
  Vector u(2);
  u(0) = mu.at(0) * std::sin(2.0 * std::numbers::pi * t);
  u(1) = mu.at(1) * std::sin(4.0 * std::numbers::pi * t);
  return u;
}

Vector heat_q0(const GridSpec& grid) {
  Vector q(grid.n_points);
  for (Index i = 0; i < grid.n_points; ++i) q(i) = heat_initial_profile(grid.node(i), grid.length);
  return q;
}

Triplets heat_input_matrix(const GridSpec& grid) {
  Triplets b;
  for (Index i = 0; i < grid.n_points; ++i)
    for (int k = 0; k < 2; ++k)
      b.emplace_back(i, k, heat_input_profile(k, grid.node(i), grid.length));
  return b;
}

}  // namespace

PolynomialSystem build_heat_cubic(const GridSpec& grid) {
  grid.validate();
  const Index n = grid.n_points;
  const double dx = grid.spacing();
  PolynomialSystem sys = make_empty_system(n, 2, 2, true);
  sys.name = "heat-cubic";

  // Right ghost q = 1 through diffusion.
  sys.op_C.add_term(AffineScalar::constant(1.0),
                    from_triplets(n, 1, {{n - 1, 0, kHeatDiffusion / (dx * dx)}}));
  sys.op_A.add_term(AffineScalar::constant(1.0),
                    from_triplets(n, n, laplacian_triplets(n, dx, 0, 0, kHeatDiffusion)));
  Triplets w;
  for (Index i = 0; i < n; ++i) w.emplace_back(i, (i * n + i) * n + i, -1.0);
  sys.op_W->add_term(AffineScalar::constant(1.0), from_triplets(n, n * n * n, w));
  sys.op_B.add_term(AffineScalar::constant(1.0), from_triplets(n, 2, heat_input_matrix(grid)));

  sys.input_signal = heat_input;
  const Vector q0 = heat_q0(grid);
  sys.initial_state = [q0](const ParamVector&) { return q0; };
  compute_stencil(sys);
  sys.validate();
  return sys;
}

std::pair<PolynomialSystem, LiftedSystemLayout> build_heat_lifted(const GridSpec& grid) {
  grid.validate();
  const Index n = grid.n_points;
  const Index m = 2 * n;
  const double dx = grid.spacing();
  const double c = kHeatDiffusion / (dx * dx);
  PolynomialSystem sys = make_empty_system(m, 2, 2);
  sys.name = "heat-lifted";

  sys.op_C.add_term(AffineScalar::constant(1.0), from_triplets(m, 1, {{n - 1, 0, c}}));

  Triplets a = laplacian_triplets(n, dx, 0, 0, kHeatDiffusion);
  // 2 * 0.005 * q_N * (ghost q = 1) / dx^2 in the w equation.
  a.emplace_back(m - 1, n - 1, 2.0 * c);
  sys.op_A.add_term(AffineScalar::constant(1.0), from_triplets(m, m, a));

  Triplets f;
  for (Index i = 0; i < n; ++i) {
    f.emplace_back(i, i * m + (n + i), -1.0);
    if (i > 0) f.emplace_back(n + i, i * m + (i - 1), 2.0 * c);
    f.emplace_back(n + i, i * m + i, -4.0 * c);
    if (i + 1 < n) f.emplace_back(n + i, i * m + (i + 1), 2.0 * c);
    f.emplace_back(n + i, (n + i) * m + (n + i), -2.0);
  }
  sys.op_F.add_term(AffineScalar::constant(1.0), from_triplets(m, m * m, f));

  sys.op_B.add_term(AffineScalar::constant(1.0), from_triplets(m, 2, heat_input_matrix(grid)));

  Triplets nb;
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < 2; ++k)
      nb.emplace_back(n + i, k * m + i, 2.0 * heat_input_profile(k, grid.node(i), grid.length));
  sys.op_N.add_term(AffineScalar::constant(1.0), from_triplets(m, 2 * m, nb));

  sys.input_signal = heat_input;
  const Vector x0 = lift_state(heat_q0(grid));
  sys.initial_state = [x0](const ParamVector&) { return x0; };
  compute_stencil(sys);
  sys.validate();

  LiftedSystemLayout layout{{n, n}, {"q", "w"}};
  return {std::move(sys), std::move(layout)};
}

PolynomialSystem build_model(const std::string& name, const GridSpec& grid) {
  if (name == "burgers") return build_burgers(grid);
  if (name == "heat-cubic") return build_heat_cubic(grid);
  if (name == "heat-lifted") return build_heat_lifted(grid).first;
  throw std::invalid_argument("unknown model '" + name + "'");
}

Vector lift_state(const Vector& q) {
  Vector x(2 * q.size());
  x.head(q.size()) = q;
  x.tail(q.size()) = q.array().square();
  return x;
}

Vector restrict_state(const Vector& x) {
  if (x.size() % 2 != 0) throw DimensionError("lifted state must have even length");
  return x.head(x.size() / 2);
}

}  // namespace polyrom
