#pragma once

// Random polynomial systems and dense oracles shared by the unit and acceptance tests.

#include "polyrom/polysys.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using polyrom::AffineScalar;
using polyrom::Index;
using polyrom::Matrix;
using polyrom::ParamVector;
using polyrom::PolynomialSystem;
using polyrom::SparseMatrix;
using polyrom::Vector;

inline SparseMatrix random_sparse(std::mt19937_64& rng, Index rows, Index cols, int per_row,
                                  double scale = 1.0) {
  std::uniform_int_distribution<Index> col(0, cols - 1);
  std::uniform_real_distribution<double> val(-scale, scale);
  std::vector<Eigen::Triplet<double, std::int64_t>> t;
  for (Index r = 0; r < rows; ++r)
    for (int k = 0; k < per_row; ++k) t.emplace_back(r, col(rng), val(rng));
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> val(-scale, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = val(rng);
  return v;
}

/// Random system with two parameters and two affine terms per operator.
inline PolynomialSystem random_system(std::mt19937_64& rng, Index n, Index n_inputs, bool cubic,
                                      double scale = 0.3) {
  PolynomialSystem sys = polyrom::make_empty_system(n, n_inputs, 2, cubic);
  sys.name = "random";
  const AffineScalar c1 = AffineScalar::constant(1.0);
  const AffineScalar p0 = AffineScalar::component(0);
  const AffineScalar p1 = AffineScalar::scaled_component(0.5, 1);
  auto col = [&](Index r) {
    Matrix d = Matrix::Zero(r, 1);
    d.col(0) = random_vector(rng, r, scale);
    return SparseMatrix(d.sparseView());
  };
  sys.op_C.add_term(c1, col(n));
  sys.op_C.add_term(p1, col(n));
  sys.op_A.add_term(c1, random_sparse(rng, n, n, 3, scale));
  sys.op_A.add_term(p0, random_sparse(rng, n, n, 2, scale));
  sys.op_F.add_term(c1, random_sparse(rng, n, n * n, 3, scale));
  sys.op_F.add_term(p1, random_sparse(rng, n, n * n, 2, scale));
  if (n_inputs > 0) {
    sys.op_B.add_term(p0, random_sparse(rng, n, n_inputs, 1, scale));
    sys.op_N.add_term(c1, random_sparse(rng, n, n_inputs * n, 2, scale));
    sys.op_N.add_term(p1, random_sparse(rng, n, n_inputs * n, 1, scale));
  }
  if (cubic) {
    sys.op_W->add_term(c1, random_sparse(rng, n, n * n * n, 2, scale));
    sys.op_W->add_term(p0, random_sparse(rng, n, n * n * n, 1, scale));
  }
  const Index nu = n_inputs;
  sys.input_signal = [nu](double t, const ParamVector& mu) {
    Vector u(nu);
    for (Index k = 0; k < nu; ++k) u(k) = mu[0] * std::sin((k + 1) * t) + 0.1 * (k + 1);
    return u;
  };
  const Vector x0 = random_vector(rng, n, 0.5);
  sys.initial_state = [x0](const ParamVector&) { return x0; };
  polyrom::compute_stencil(sys);
  sys.validate();
  return sys;
}

inline Vector dense_kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i)
    for (Index j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
  return out;
}

inline Matrix dense_kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix dense(const polyrom::AffineOperator& op, const ParamVector& mu) {
  Matrix out = Matrix::Zero(op.rows(), op.cols());
  for (const auto& t : op.terms()) out += t.coefficient(mu) * Matrix(t.matrix);
  return out;
}

/// Dense-oracle right-hand side with explicitly formed Kronecker products.
inline Vector dense_rhs(const PolynomialSystem& sys, const Vector& x, const Vector& u,
                        const ParamVector& mu) {
  Vector f = Vector::Zero(sys.dim_state);
  if (!sys.op_C.is_zero()) f += dense(sys.op_C, mu).col(0);
  if (!sys.op_A.is_zero()) f += dense(sys.op_A, mu) * x;
  if (!sys.op_F.is_zero()) f += dense(sys.op_F, mu) * dense_kron(x, x);
  if (sys.dim_input > 0 && !sys.op_B.is_zero()) f += dense(sys.op_B, mu) * u;
  if (sys.dim_input > 0 && !sys.op_N.is_zero()) f += dense(sys.op_N, mu) * dense_kron(u, x);
  if (sys.is_cubic()) f += dense(*sys.op_W, mu) * dense_kron(dense_kron(x, x), x);
  return f;
}

/// Central differences of g around x, column by column.
template <class G>
Matrix fd_jacobian(G g, const Vector& x, double h = 1e-6) {
  const Vector g0 = g(x);
  Matrix j(g0.size(), x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (g(xp) - g(xm)) / (2.0 * h);
  }
  return j;
}

inline Matrix random_orthonormal(std::mt19937_64& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) m.col(c) = random_vector(rng, rows);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline double rel_err(const Matrix& a, const Matrix& ref) {
  const double d = ref.norm();
  return d == 0.0 ? a.norm() : (a - ref).norm() / d;
}

}  // namespace testing_support
