#include "support.hpp"

#include "polyrom/fomsolve.hpp"
#include "polyrom/romref.hpp"

#include <doctest.h>

using namespace polyrom;
using namespace testing_support;

namespace {

ReducedBasis basis_of(const Matrix& phi) {
  ReducedBasis b;
  b.phi = phi;
  b.n = phi.cols();
  return b;
}

PolynomialSystem linear_system(std::mt19937_64& rng, Index n) {
  PolynomialSystem sys = make_empty_system(n, 0, 1);
  Matrix a = -2.0 * Matrix::Identity(n, n) + Matrix(random_sparse(rng, n, n, 2, 0.3));
  sys.op_A.add_term(AffineScalar::constant(1.0), a.sparseView());
  sys.op_C.add_term(AffineScalar::constant(1.0), SparseMatrix(Matrix(random_vector(rng, n)).sparseView()));
  const Vector x0 = random_vector(rng, n);
  sys.initial_state = [x0](const ParamVector&) { return x0; };
  compute_stencil(sys);
  return sys;
}

}  // namespace

TEST_CASE("reduced Newton") {
  std::mt19937_64 rng(1);
  SUBCASE("linear system converges in one iteration") {
    const PolynomialSystem sys = linear_system(rng, 8);
    const ReducedBasis b = basis_of(random_orthonormal(rng, 8, 3));
    auto g = galerkin_reference_assembler(sys, b);
    g->prepare({0.0});
    const std::vector<Vector> hist{random_vector(rng, 3)}, in{Vector(), Vector()};
    const NewtonResult r = reduced_newton(*g, {}, backward_euler(0.1), hist, in);
    CHECK(r.iterations == 1);
    CHECK(r.residual < 1e-6);
  }
  SUBCASE("scalar quadratic toy matches a hand Newton iteration") {
    // x' = -x^2 with Phi = [1]: r(y) = y - y0 + dt y^2.
    PolynomialSystem sys = make_empty_system(1, 0, 1);
    Matrix f(1, 1);
    f(0, 0) = -1.0;
    sys.op_F.add_term(AffineScalar::constant(1.0), f.sparseView());
    compute_stencil(sys);
    const double dt = 0.5, y0 = 2.0;
    double y = y0;
    int k = 0;
    while (std::abs(y - y0 + dt * y * y) >= 1e-6) {
      y -= (y - y0 + dt * y * y) / (1.0 + 2.0 * dt * y);
      ++k;
    }
    auto g = galerkin_reference_assembler(sys, basis_of(Matrix::Ones(1, 1)));
    g->prepare({0.0});
    const std::vector<Vector> hist{Vector::Constant(1, y0)}, in{Vector(), Vector()};
    const NewtonResult r = reduced_newton(*g, {}, backward_euler(dt), hist, in);
    CHECK(r.iterations == k);
    CHECK(r.x(0) == doctest::Approx(y).epsilon(1e-14));
  }
}

TEST_CASE("Galerkin reference assembler") {
  std::mt19937_64 rng(2);
  SUBCASE("identity basis reproduces the FOM") {
    const PolynomialSystem sys = random_system(rng, 12, 1, false);
    const ParamVector mu{0.3, 0.2};
    const MultistepScheme s = backward_euler(0.05);
    const Trajectory fom = integrate_fom(sys, s, {}, mu, 20);
    auto g = galerkin_reference_assembler(sys, basis_of(Matrix::Identity(12, 12)));
    const RomRun rom = run_rom(*g, basis_of(Matrix::Identity(12, 12)), sys, s, {}, mu, 20);
    CHECK((rom.reconstructed - fom.states).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rom.iterations == fom.iterations);
  }
  SUBCASE("full-rank rotated basis matches the FOM") {
    const PolynomialSystem sys = random_system(rng, 10, 2, true);
    const ParamVector mu{0.5, -0.4};
    const MultistepScheme s = crank_nicolson(0.05);
    NewtonSettings tight;
    tight.tol = 1e-12;
    const Trajectory fom = integrate_fom(sys, s, tight, mu, 20);
    const ReducedBasis b = basis_of(random_orthonormal(rng, 10, 10));
    auto g = galerkin_reference_assembler(sys, b);
    const RomRun rom = run_rom(*g, b, sys, s, tight, mu, 20);
    CHECK((rom.reconstructed - fom.states).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("zero history and input: first rhs is -dt sum(beta) Phi^T C") {
    const PolynomialSystem sys = random_system(rng, 9, 2, false);
    const ParamVector mu{0.5, 0.7};
    const ReducedBasis b = basis_of(random_orthonormal(rng, 9, 3));
    auto g = galerkin_reference_assembler(sys, b);
    g->prepare(mu);
    const MultistepScheme s = crank_nicolson(0.1);
    const std::vector<Vector> hist{Vector::Zero(3)}, in{Vector::Zero(2), Vector::Zero(2)};
    g->begin_step(s, hist, in);
    Matrix lhs;
    Vector rhs;
    g->assemble(Vector::Zero(3), lhs, rhs);
    const Vector want = -0.1 * 1.0 * b.phi.transpose() * dense(sys.op_C, mu).col(0);
    CHECK(rel_err(rhs, want) < 1e-14);
  }
  SUBCASE("zero steps give the projected initial state") {
    const PolynomialSystem sys = random_system(rng, 9, 1, false);
    const ReducedBasis b = basis_of(random_orthonormal(rng, 9, 4));
    auto g = galerkin_reference_assembler(sys, b);
    const RomRun rom = run_rom(*g, b, sys, backward_euler(0.1), {}, {0.1, 0.1}, 0);
    REQUIRE(rom.reconstructed.cols() == 1);
    const Vector x0 = sys.initial({0.1, 0.1});
    CHECK(rel_err(rom.reconstructed.col(0), b.phi * (b.phi.transpose() * x0)) < 1e-14);
  }
}

TEST_CASE("LSPG reference assembler") {
  std::mt19937_64 rng(3);
  SUBCASE("linear system: LSPG and Galerkin agree when the residual can vanish") {
    const PolynomialSystem sys = linear_system(rng, 6);
    const ReducedBasis b = basis_of(random_orthonormal(rng, 6, 6));
    auto g = galerkin_reference_assembler(sys, b);
    auto l = lspg_reference_assembler(sys, b);
    NewtonSettings tight;
    tight.tol = 1e-12;
    const RomRun rg = run_rom(*g, b, sys, backward_euler(0.1), tight, {0.0}, 5);
    const RomRun rl = run_rom(*l, b, sys, backward_euler(0.1), tight, {0.0}, 5);
    CHECK((rg.reduced - rl.reduced).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("normal matrix matches finite differences of the reduced residual") {
    const PolynomialSystem sys = random_system(rng, 10, 1, false);
    const ParamVector mu{0.4, 0.6};
    const ReducedBasis b = basis_of(random_orthonormal(rng, 10, 2));
    const MultistepScheme s = backward_euler(0.1);
    const Vector hprev = random_vector(rng, 2), xhat = random_vector(rng, 2);
    const Vector u0 = random_vector(rng, 1), u1 = random_vector(rng, 1);
    auto r = [&](const Vector& y) {
      const std::vector<Vector> hist{b.phi * y, b.phi * hprev}, in{u0, u1};
      return fom_residual(sys, s, hist, in, mu);
    };
    const Matrix jt = fd_jacobian(r, xhat);
    auto l = lspg_reference_assembler(sys, b);
    l->prepare(mu);
    const std::vector<Vector> hist{hprev}, in{u0, u1};
    l->begin_step(s, hist, in);
    Matrix lhs;
    Vector rhs;
    l->assemble(xhat, lhs, rhs);
    CHECK(rel_err(lhs, jt.transpose() * jt) < 1e-5);
    CHECK(rel_err(rhs, jt.transpose() * r(xhat)) < 1e-5);
  }
  SUBCASE("converged iterate satisfies the stopping rule") {
    const PolynomialSystem sys = random_system(rng, 10, 1, false);
    const ReducedBasis b = basis_of(random_orthonormal(rng, 10, 3));
    auto l = lspg_reference_assembler(sys, b);
    l->prepare({0.1, 0.2});
    const std::vector<Vector> hist{random_vector(rng, 3)}, in{random_vector(rng, 1), random_vector(rng, 1)};
    const NewtonResult res = reduced_newton(*l, {}, backward_euler(0.05), hist, in);
    Matrix lhs;
    Vector rhs;
    l->begin_step(backward_euler(0.05), hist, in);
    l->assemble(res.x, lhs, rhs);
    CHECK(rhs.norm() < 1e-6);
  }
  SUBCASE("singular reduced matrix is reported") {
    // x_1' = 10 x_1 with dt = 0.1 makes 1 - dt * 10 vanish up to rounding.
    PolynomialSystem sys = make_empty_system(2, 0, 1);
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 10.0;
    a(1, 1) = 1.0;
    sys.op_A.add_term(AffineScalar::constant(1.0), a.sparseView());
    compute_stencil(sys);
    auto g = galerkin_reference_assembler(sys, basis_of(Matrix::Identity(2, 2)));
    g->prepare({0.0});
    const std::vector<Vector> hist{Vector::Ones(2)}, in{Vector(), Vector()};
    CHECK_THROWS_AS(reduced_newton(*g, {}, backward_euler(0.1), hist, in), SingularSystem);
  }
}
