#pragma once

#include "polyrom/polysys.hpp"

#include <span>

namespace polyrom {

struct LinearEntry {
  Index row;
  Index col;
  double value;
};

struct QuadraticEntry {
  Index row;
  Index i;
  Index j;
  double value;
};

struct BilinearEntry {
  Index row;
  Index input;
  Index col;
  double value;
};

struct CubicEntry {
  Index row;
  Index i;
  Index j;
  Index k;
  double value;
};

/// A polynomial system frozen at one parameter value, stored as decoded coordinate
/// lists. Rows and state columns may be a local subset of the full system (see
/// restrict_rows), which is how sampled-row evaluation works.
class PolynomialKernel {
 public:
  PolynomialKernel() = default;
  PolynomialKernel(const PolynomialSystem& sys, const ParamVector& mu);

  Index rows() const { return rows_; }
  Index state_dim() const { return state_dim_; }
  Index input_dim() const { return input_dim_; }

  /// f(x, u); x has state_dim entries, result has rows() entries.
  Vector rhs(const Vector& x, const Vector& u) const;
  void rhs_into(const Vector& x, const Vector& u, Vector& out) const;

  /// (df/dx)(x, u) * basis, basis has state_dim rows.
  Matrix jacobian_times(const Vector& x, const Vector& u, const Matrix& basis) const;

  Eigen::SparseMatrix<double> jacobian(const Vector& x, const Vector& u) const;

  /// Kernel of the given rows with state columns remapped to `columns` (sorted, must
  /// contain every column those rows touch). Local column c refers to columns[c].
  PolynomialKernel restrict_rows(std::span<const Index> rows, std::span<const Index> columns) const;

  const Vector& constant() const { return constant_; }
  const std::vector<LinearEntry>& linear() const { return linear_; }
  const std::vector<QuadraticEntry>& quadratic() const { return quadratic_; }
  const std::vector<LinearEntry>& input_linear() const { return input_linear_; }
  const std::vector<BilinearEntry>& bilinear() const { return bilinear_; }
  const std::vector<CubicEntry>& cubic() const { return cubic_; }

  /// Appends scale times every entry of `other` (same rows, state and input sizes).
  void accumulate(const PolynomialKernel& other, double scale);
  void scale(double s);

  /// Kernel of a single operator matrix with unit coefficient; `kind` is one of
  /// 'C', 'A', 'F', 'B', 'N', 'W'.
  static PolynomialKernel from_operator(const PolynomialSystem& sys, char kind,
                                        const SparseMatrix& m);

 private:
  friend class JacobianWorkspace;

  void add_operator(char kind, const SparseMatrix& m, double scale);

  Index rows_ = 0;
  Index state_dim_ = 0;
  Index input_dim_ = 0;
  Vector constant_;
  std::vector<LinearEntry> linear_;
  std::vector<QuadraticEntry> quadratic_;
  std::vector<LinearEntry> input_linear_;
  std::vector<BilinearEntry> bilinear_;
  std::vector<CubicEntry> cubic_;
};

struct KernelTerm {
  AffineScalar theta;
  PolynomialKernel kernel;
};

/// One kernel per affine term of every operator.
std::vector<KernelTerm> kernel_terms(const PolynomialSystem& sys);
/// sum_t theta_t(mu) kernel_t.
PolynomialKernel combine_kernel_terms(const std::vector<KernelTerm>& terms, const ParamVector& mu);

/// Assembles a*I + c*(df/dx) into a fixed compressed pattern, so repeated Newton
/// iterations neither reallocate nor re-sort. The kernel must be square.
class JacobianWorkspace {
 public:
  explicit JacobianWorkspace(const PolynomialKernel& kernel);

  const Eigen::SparseMatrix<double>& assemble(const Vector& x, const Vector& u, double diag,
                                              double scale);
  const Eigen::SparseMatrix<double>& matrix() const { return jac_; }

 private:
  const PolynomialKernel* kernel_;
  Eigen::SparseMatrix<double> jac_;
  std::vector<Index> diag_slot_;
  std::vector<Index> linear_slot_;
  std::vector<Index> quad_slot_i_;
  std::vector<Index> quad_slot_j_;
  std::vector<Index> bilinear_slot_;
  std::vector<Index> cubic_slot_i_;
  std::vector<Index> cubic_slot_j_;
  std::vector<Index> cubic_slot_k_;
};

}  // namespace polyrom
