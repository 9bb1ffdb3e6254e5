#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace polyrom {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Row-major with 64-bit indices so that N x N^3 cubic operators remain addressable.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::initializer_list<double> values) : values_(values) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t i) const { return values_.at(i); }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const ParamVector& other) const = default;

 private:
  std::vector<double> values_;
};

std::string to_string(const ParamVector& mu);

/// Coefficient theta(mu) multiplying one term of an affine operator. Restricted to
/// a constant, a single parameter component, or a scaled component.
class AffineScalar {
 public:
  static AffineScalar constant(double c) { return AffineScalar(c, std::nullopt); }
  static AffineScalar component(std::size_t i) { return AffineScalar(1.0, i); }
  static AffineScalar scaled_component(double c, std::size_t i) { return AffineScalar(c, i); }

  /// Throws std::out_of_range when the referenced component does not exist.
  double operator()(const ParamVector& mu) const;

  double scale() const { return scale_; }
  std::optional<std::size_t> index() const { return index_; }
  std::string describe() const;

 private:
  AffineScalar(double scale, std::optional<std::size_t> index) : scale_(scale), index_(index) {}

  double scale_;
  std::optional<std::size_t> index_;
};

struct AffineTerm {
  AffineScalar coefficient;
  SparseMatrix matrix;
};

/// Sum_i theta_i(mu) M_i with all M_i of one shape. An operator without terms is
/// identically zero.
class AffineOperator {
 public:
  AffineOperator() = default;
  AffineOperator(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  static AffineOperator single(SparseMatrix m, AffineScalar c = AffineScalar::constant(1.0));

  void add_term(AffineScalar coefficient, SparseMatrix matrix);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const std::vector<AffineTerm>& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Coefficients theta_i(mu) for every term, in term order.
  std::vector<double> coefficients(const ParamVector& mu) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<AffineTerm> terms_;
};

SparseMatrix evaluate_operator(const AffineOperator& op, const ParamVector& mu);

/// Semi-discrete FOM dx/dt = C + A x + F (x (x) x) + B u + N (u (x) x) [+ W (x (x) x (x) x)].
///
/// Kronecker column layout (0-based): F column i*N + j couples x_i x_j, N column k*N + j
/// couples u_k x_j, W column (i*N + j)*N + k couples x_i x_j x_k.
struct PolynomialSystem {
  std::string name;
  Index dim_state = 0;
  Index dim_input = 0;
  std::size_t num_params = 0;

  AffineOperator op_C;
  AffineOperator op_A;
  AffineOperator op_F;
  AffineOperator op_B;
  AffineOperator op_N;
  std::optional<AffineOperator> op_W;

  std::function<Vector(double, const ParamVector&)> input_signal;
  std::function<Vector(const ParamVector&)> initial_state;

  /// stencil[s] lists the state indices row s of the right-hand side depends on
  /// (always including s itself), sorted ascending.
  std::vector<std::vector<Index>> stencil;

  bool is_cubic() const { return op_W.has_value() && !op_W->is_zero(); }

  /// Checks operator shapes against dim_state / dim_input and that the stencil covers
  /// every row. Throws DimensionError.
  void validate() const;

  Vector input(double t, const ParamVector& mu) const;
  Vector initial(const ParamVector& mu) const;
};

/// Empty operators of the right shapes, zero input and zero initial state.
PolynomialSystem make_empty_system(Index dim_state, Index dim_input, std::size_t num_params,
                                   bool cubic = false);

/// Rebuilds sys.stencil from the union of operator sparsity patterns.
void compute_stencil(PolynomialSystem& sys);

Vector system_rhs(const PolynomialSystem& sys, const Vector& x, const Vector& u,
                  const ParamVector& mu);

Eigen::SparseMatrix<double> system_rhs_jacobian(const PolynomialSystem& sys, const Vector& x,
                                                const Vector& u, const ParamVector& mu);

// Kronecker selector identities. `ell` is 1-based to match the usual notation:
// M G^ell picks the contiguous block of columns (ell-1)n .. ell n - 1 and M H^ell the
// strided columns ell-1, ell-1+n, ..., ell-1+(n-1)n.

Matrix kron_select_G(const Matrix& M, Index ell);
Matrix kron_select_H(const Matrix& M, Index ell);

/// Returns (sum_l G^l xhat_l, sum_l H^l xhat_l) built from explicit selector matrices.
std::pair<Matrix, Matrix> kron_sum_identity_check(const Vector& xhat);

/// Dense G^ell and H^ell (n^2 x n), 1-based ell. Test support.
Matrix selector_G(Index n, Index ell);
Matrix selector_H(Index n, Index ell);

/// Dense a (x) b.
Vector kron(const Vector& a, const Vector& b);

using Triplet = Eigen::Triplet<double, std::int64_t>;

/// Row-major matrix from triplets (duplicates summed). Memory is O(rows + nnz)
/// regardless of the column count, so N x N^3 operators are fine.
SparseMatrix sparse_from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);

// Coordinate-list text format: "rows cols nnz" then 1-based "row col value" lines.
void write_coo(std::ostream& os, const SparseMatrix& m);
SparseMatrix read_coo(std::istream& is);

}  // namespace polyrom
