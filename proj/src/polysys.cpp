#include "polyrom/polysys.hpp"

#include "polyrom/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace polyrom {

std::string to_string(const ParamVector& mu) {
  std::ostringstream os;
  os << std::setprecision(17) << "(";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (i) os << ", ";
    os << mu[i];
  }
  os << ")";
  return os.str();
}

double AffineScalar::operator()(const ParamVector& mu) const {
  if (!index_) return scale_;
  if (*index_ >= mu.size()) {
    throw std::out_of_range("affine coefficient references parameter " + std::to_string(*index_) +
                            " but mu has " + std::to_string(mu.size()) + " components");
  }
  return scale_ * mu[*index_];
}

std::string AffineScalar::describe() const {
  std::ostringstream os;
  os << std::setprecision(17);
  if (!index_) {
    os << "const:" << scale_;
  } else {
    os << "mu[" << *index_ << "]*" << scale_;
  }
  return os.str();
}

AffineOperator AffineOperator::single(SparseMatrix m, AffineScalar c) {
  AffineOperator op(m.rows(), m.cols());
  op.add_term(c, std::move(m));
  return op;
}

void AffineOperator::add_term(AffineScalar coefficient, SparseMatrix matrix) {
  if (matrix.rows() != rows_ || matrix.cols() != cols_) {
    throw DimensionError("affine term shape " + std::to_string(matrix.rows()) + "x" +
                         std::to_string(matrix.cols()) + " does not match operator shape " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  matrix.makeCompressed();
  terms_.push_back({coefficient, std::move(matrix)});
}

std::vector<double> AffineOperator::coefficients(const ParamVector& mu) const {
  std::vector<double> theta;
  theta.reserve(terms_.size());
  for (const auto& t : terms_) theta.push_back(t.coefficient(mu));
  return theta;
}

SparseMatrix evaluate_operator(const AffineOperator& op, const ParamVector& mu) {
  // Built from triplets: Eigen's sparse sum reserves O(max(rows, cols)) entries,
  // which is prohibitive for N x N^3 operators. The union pattern is kept even
  // when a coefficient is zero.
  std::vector<Triplet> t;
  for (const auto& term : op.terms()) {
    const double theta = term.coefficient(mu);
    for (Index r = 0; r < term.matrix.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(term.matrix, r); it; ++it) t.emplace_back(r, it.col(), theta * it.value());
  }
  return sparse_from_triplets(op.rows(), op.cols(), std::move(t));
}

namespace {

void check_shape(const AffineOperator& op, Index rows, Index cols, const char* name) {
  if (op.rows() != rows || op.cols() != cols) {
    throw DimensionError(std::string("operator ") + name + " has shape " +
                         std::to_string(op.rows()) + "x" + std::to_string(op.cols()) +
                         ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

void PolynomialSystem::validate() const {
  const Index n = dim_state;
  if (n <= 0) throw DimensionError("state dimension must be positive");
  if (dim_input < 0) throw DimensionError("input dimension must be non-negative");
  check_shape(op_C, n, 1, "C");
  check_shape(op_A, n, n, "A");
  check_shape(op_F, n, n * n, "F");
  check_shape(op_B, n, dim_input, "B");
  check_shape(op_N, n, dim_input * n, "N");
  if (op_W) check_shape(*op_W, n, n * n * n, "W");
  if (static_cast<Index>(stencil.size()) != n) {
    throw DimensionError("stencil must have one entry per row");
  }
  for (Index s = 0; s < n; ++s) {
    if (!std::binary_search(stencil[s].begin(), stencil[s].end(), s)) {
      throw DimensionError("stencil of row " + std::to_string(s) + " does not contain the row");
    }
  }
}

Vector PolynomialSystem::input(double t, const ParamVector& mu) const {
  if (!input_signal) return Vector::Zero(dim_input);
  Vector u = input_signal(t, mu);
  if (u.size() != dim_input) throw DimensionError("input signal returned wrong length");
  return u;
}

Vector PolynomialSystem::initial(const ParamVector& mu) const {
  if (!initial_state) return Vector::Zero(dim_state);
  Vector x0 = initial_state(mu);
  if (x0.size() != dim_state) throw DimensionError("initial state has wrong length");
  return x0;
}

PolynomialSystem make_empty_system(Index dim_state, Index dim_input, std::size_t num_params,
                                   bool cubic) {
  PolynomialSystem sys;
  const Index n = dim_state;
  sys.dim_state = n;
  sys.dim_input = dim_input;
  sys.num_params = num_params;
  sys.op_C = AffineOperator(n, 1);
  sys.op_A = AffineOperator(n, n);
  sys.op_F = AffineOperator(n, n * n);
  sys.op_B = AffineOperator(n, dim_input);
  sys.op_N = AffineOperator(n, dim_input * n);
  if (cubic) sys.op_W = AffineOperator(n, n * n * n);
  sys.stencil.assign(static_cast<std::size_t>(n), {});
  for (Index s = 0; s < n; ++s) sys.stencil[s] = {s};
  return sys;
}

void compute_stencil(PolynomialSystem& sys) {
  const Index n = sys.dim_state;
  std::vector<std::set<Index>> deps(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) deps[s].insert(s);

  auto visit = [&](const AffineOperator& op, auto&& decode) {
    for (const auto& term : op.terms()) {
      const auto& m = term.matrix;
      for (Index r = 0; r < m.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) decode(r, it.col());
      }
    }
  };
  visit(sys.op_A, [&](Index r, Index c) { deps[r].insert(c); });
  visit(sys.op_F, [&](Index r, Index c) {
    deps[r].insert(c / n);
    deps[r].insert(c % n);
  });
  visit(sys.op_N, [&](Index r, Index c) { deps[r].insert(c % n); });
  if (sys.op_W) {
    visit(*sys.op_W, [&](Index r, Index c) {
      deps[r].insert(c / (n * n));
      deps[r].insert((c / n) % n);
      deps[r].insert(c % n);
    });
  }
  sys.stencil.assign(static_cast<std::size_t>(n), {});
  for (Index s = 0; s < n; ++s) sys.stencil[s].assign(deps[s].begin(), deps[s].end());
}

Vector system_rhs(const PolynomialSystem& sys, const Vector& x, const Vector& u,
                  const ParamVector& mu) {
  if (x.size() != sys.dim_state || u.size() != sys.dim_input) {
    throw DimensionError("system_rhs: state or input length mismatch");
  }
  return PolynomialKernel(sys, mu).rhs(x, u);
}

Eigen::SparseMatrix<double> system_rhs_jacobian(const PolynomialSystem& sys, const Vector& x,
                                                const Vector& u, const ParamVector& mu) {
  if (x.size() != sys.dim_state || u.size() != sys.dim_input) {
    throw DimensionError("system_rhs_jacobian: state or input length mismatch");
  }
  return PolynomialKernel(sys, mu).jacobian(x, u);
}

namespace {

Index selector_size(Index cols) {
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(cols))));
  if (n * n != cols) throw DimensionError("selector input must have n^2 columns");
  return n;
}

void check_ell(Index ell, Index n) {
  if (ell < 1 || ell > n) {
    throw std::out_of_range("selector index " + std::to_string(ell) + " outside 1.." +
                            std::to_string(n));
  }
}

}  // namespace

Matrix kron_select_G(const Matrix& M, Index ell) {
  const Index n = selector_size(M.cols());
  check_ell(ell, n);
  return M.middleCols((ell - 1) * n, n);
}

Matrix kron_select_H(const Matrix& M, Index ell) {
  const Index n = selector_size(M.cols());
  check_ell(ell, n);
  Matrix out(M.rows(), n);
  for (Index i = 0; i < n; ++i) out.col(i) = M.col(ell - 1 + i * n);
  return out;
}

Matrix selector_G(Index n, Index ell) {
  check_ell(ell, n);
  Matrix g = Matrix::Zero(n * n, n);
  g.middleRows((ell - 1) * n, n).setIdentity();
  return g;
}

Matrix selector_H(Index n, Index ell) {
  check_ell(ell, n);
  Matrix h = Matrix::Zero(n * n, n);
  for (Index i = 0; i < n; ++i) h(i * n + (ell - 1), i) = 1.0;
  return h;
}

std::pair<Matrix, Matrix> kron_sum_identity_check(const Vector& xhat) {
  const Index n = xhat.size();
  Matrix g = Matrix::Zero(n * n, n);
  Matrix h = Matrix::Zero(n * n, n);
  for (Index ell = 1; ell <= n; ++ell) {
    g += selector_G(n, ell) * xhat(ell - 1);
    h += selector_H(n, ell) * xhat(ell - 1);
  }
  return {g, h};
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

void write_coo(std::ostream& os, const SparseMatrix& m) {
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

SparseMatrix sparse_from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= cols)
      throw DimensionError("triplet index out of range");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
  });
  SparseMatrix m(rows, cols);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> per_row = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(rows);
  for (std::size_t k = 0; k < triplets.size(); ++k)
    if (k == 0 || triplets[k].row() != triplets[k - 1].row() || triplets[k].col() != triplets[k - 1].col())
      ++per_row(triplets[k].row());
  m.reserve(per_row);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && t.row() == triplets[k - 1].row() && t.col() == triplets[k - 1].col()) {
      m.coeffRef(t.row(), t.col()) += t.value();
    } else {
      m.insert(t.row(), t.col()) = t.value();
    }
  }
  m.makeCompressed();
  return m;
}

SparseMatrix read_coo(std::istream& is) {
  Index rows = 0, cols = 0, nnz = 0;
  if (!(is >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw std::runtime_error("coordinate list: malformed header");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (Index k = 0; k < nnz; ++k) {
    Index r = 0, c = 0;
    double v = 0.0;
    if (!(is >> r >> c >> v)) throw std::runtime_error("coordinate list: truncated entries");
    if (r < 1 || r > rows || c < 1 || c > cols) {
      throw std::runtime_error("coordinate list: entry index out of range");
    }
    triplets.emplace_back(r - 1, c - 1, v);
  }
  return sparse_from_triplets(rows, cols, std::move(triplets));
}

}  // namespace polyrom
