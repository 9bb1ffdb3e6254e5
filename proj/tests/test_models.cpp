#include "support.hpp"

#include "polyrom/models.hpp"

#include <doctest.h>

using namespace polyrom;
using namespace testing_support;

TEST_CASE("grid spec") {
  const GridSpec g{2.0, 9};
  CHECK(g.spacing() == doctest::Approx(0.2));
  CHECK(g.node(0) == doctest::Approx(0.2));
  CHECK(g.node(8) == doctest::Approx(1.8));
  CHECK_THROWS(GridSpec({1.0, 2}).validate());
  CHECK_THROWS(GridSpec({0.0, 10}).validate());
}

TEST_CASE("Burgers model") {
  const GridSpec grid{1.0, 8};
  const PolynomialSystem sys = build_burgers(grid);
  const double dx = grid.spacing();

  SUBCASE("constant state leaves interior rows unchanged") {
    const Vector x = Vector::Constant(8, 1.3);
    const ParamVector mu{1.3, 0.05};
    const Vector f = system_rhs(sys, x, sys.input(0.0, mu), mu);
    for (Index i = 1; i < 7; ++i) CHECK(std::abs(f(i)) < 1e-10);
  }
  SUBCASE("zero viscosity removes diffusion and its boundary input") {
    CHECK(Matrix(evaluate_operator(sys.op_A, {2.0, 0.0})).norm() == 0.0);
    CHECK(Matrix(evaluate_operator(sys.op_B, {2.0, 0.0})).norm() == 0.0);
  }
  SUBCASE("ramp matches a stencil evaluation of mu2 w_xx - w w_x") {
    const ParamVector mu{1.0, 0.1};
    Vector x(8);
    for (Index i = 0; i < 8; ++i) x(i) = 1.0 - grid.node(i);
    const Vector f = system_rhs(sys, x, sys.input(0.0, mu), mu);
    for (Index i = 0; i < 8; ++i) {
      const double left = i == 0 ? 1.0 : x(i - 1);
      const double right = i == 7 ? 0.0 : x(i + 1);
      const double want = mu[1] * (left - 2 * x(i) + right) / (dx * dx) - x(i) * (right - left) / (2 * dx);
      CHECK(f(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("zero is an equilibrium when mu1 = 0") {
    const ParamVector mu{0.0, 0.03};
    CHECK(system_rhs(sys, Vector::Zero(8), sys.input(0.3, mu), mu).norm() == 0.0);
  }
  SUBCASE("input and initial state") {
    CHECK(sys.input(0.7, {2.5, 0.01})(0) == 2.5);
    CHECK(sys.initial({2.5, 0.01}).norm() == 0.0);
    CHECK(!sys.is_cubic());
  }
}

TEST_CASE("heat model, cubic form") {
  const GridSpec grid{1.0, 8};
  const PolynomialSystem sys = build_heat_cubic(grid);
  SUBCASE("initial profile endpoints") {
    CHECK(heat_initial_profile(0.0, 1.0) == doctest::Approx(0.0));
    CHECK(heat_initial_profile(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(heat_initial_profile(2.0, 2.0) == doctest::Approx(1.0));
    const Vector q0 = sys.initial({0.0, 0.0});
    for (Index i = 0; i < 8; ++i) CHECK(q0(i) == doctest::Approx(heat_initial_profile(grid.node(i), 1.0)));
  }
  SUBCASE("input profiles peak at L/4 and 3L/4") {
    CHECK(heat_input_profile(0, 0.25, 1.0) == doctest::Approx(1.0));
    CHECK(heat_input_profile(1, 0.75, 1.0) == doctest::Approx(1.0));
    CHECK(heat_input_profile(0, 0.75, 1.0) == doctest::Approx(1.0 / 26.0));
  }
  SUBCASE("zero parameters give zero input") {
    for (double t : {0.0, 0.1, 0.37, 2.0}) CHECK(sys.input(t, {0.0, 0.0}).norm() == 0.0);
    const Vector u = sys.input(0.125, {1.5, 0.5});
    CHECK(u(0) == doctest::Approx(1.5 * std::sin(2 * M_PI * 0.125)));
    CHECK(u(1) == doctest::Approx(0.5 * std::sin(4 * M_PI * 0.125)));
  }
  SUBCASE("constant 0.5 gives reaction -0.125 away from the boundaries") {
    const Vector q = Vector::Constant(8, 0.5);
    const Vector f = system_rhs(sys, q, Vector::Zero(2), {0.0, 0.0});
    for (Index i = 1; i < 7; ++i) CHECK(f(i) == doctest::Approx(-0.125).epsilon(1e-12));
    const Vector oracle = dense_rhs(sys, q, Vector::Zero(2), {0.0, 0.0});
    CHECK(rel_err(f, oracle) < 1e-13);
  }
  SUBCASE("right Dirichlet value enters only the last row") {
    const Vector f = system_rhs(sys, Vector::Zero(8), Vector::Zero(2), {0.0, 0.0});
    const double dx = grid.spacing();
    CHECK(f(7) == doctest::Approx(0.005 / (dx * dx)));
    CHECK(f.head(7).norm() == 0.0);
  }
}

TEST_CASE("heat model, lifted form") {
  const GridSpec grid{1.0, 16};
  const auto [lifted, layout] = build_heat_lifted(grid);
  const PolynomialSystem cubic = build_heat_cubic(grid);
  CHECK(layout.total() == 32);
  CHECK(layout.offset(1) == 16);
  SUBCASE("lifted initial state") {
    const Vector x0 = lifted.initial({1.0, 1.0});
    const Vector q0 = cubic.initial({1.0, 1.0});
    CHECK(x0.head(16) == q0);
    CHECK(x0.tail(16) == q0.cwiseProduct(q0));
  }
  SUBCASE("q block matches the cubic system when w = q^2") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
      Vector q(16);
      for (Index i = 0; i < 16; ++i) q(i) = std::sin(3.0 * grid.node(i) + trial) + 0.2 * trial;
      const ParamVector mu{1.5 - trial, 0.5 * trial};
      const Vector u = cubic.input(0.1 * trial + 0.05, mu);
      const Vector fl = system_rhs(lifted, lift_state(q), u, mu);
      const Vector fc = system_rhs(cubic, q, u, mu);
      CHECK(rel_err(fl.head(16), fc) < 1e-12);
      // w' = 2 q q' holds exactly for the semi-discrete lifting.
      CHECK(rel_err(fl.tail(16), 2.0 * q.cwiseProduct(fc)) < 1e-12);
    }
  }
  SUBCASE("zero state and input give the boundary constant only") {
    const Vector f = system_rhs(lifted, Vector::Zero(32), Vector::Zero(2), {0.0, 0.0});
    CHECK(f(15) > 0.0);
    Vector rest = f;
    rest(15) = 0.0;
    CHECK(rest.norm() == 0.0);
  }
  SUBCASE("lift and restrict") {
    CHECK(lift_state(Vector::Zero(3)).norm() == 0.0);
    CHECK(lift_state(Vector::Ones(3)) == Vector::Ones(6));
    std::mt19937_64 rng(1);
    const Vector q = random_vector(rng, 7);
    CHECK(restrict_state(lift_state(q)) == q);
    CHECK_THROWS_AS(restrict_state(Vector::Zero(5)), DimensionError);
  }
  SUBCASE("build_model by name") {
    CHECK(build_model("heat-lifted", grid).dim_state == 32);
    CHECK(build_model("burgers", grid).dim_state == 16);
    CHECK(build_model("heat-cubic", grid).is_cubic());
    CHECK_THROWS(build_model("wave", grid));
  }
}
