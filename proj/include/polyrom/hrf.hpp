#pragma once

#include "polyrom/basis.hpp"
#include "polyrom/romref.hpp"

#include <memory>
#include <string>
#include <vector>

namespace polyrom {

template <class T>
struct ReducedTerm {
  AffineScalar theta;
  T tensor;
};

using StridedView = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

/// Reduced Galerkin tensors, one per affine term of each operator.
struct HrfGalerkinOperators {
  Index n = 0;
  Index n_inputs = 0;
  Matrix PtP;
  std::vector<ReducedTerm<Vector>> PtC;
  std::vector<ReducedTerm<Matrix>> PtAP;
  std::vector<ReducedTerm<Matrix>> PtF;  // n x n^2
  std::vector<ReducedTerm<Matrix>> PtB;  // n x N_u
  std::vector<ReducedTerm<Matrix>> PtN;  // n x N_u n
  std::vector<ReducedTerm<Matrix>> PtW;  // n x n^3, cubic systems only

  /// Column selections of F = PtF[term]; ell is 1-based.
  static Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> F_G(const Matrix& F, Index ell);
  static StridedView F_H(const Matrix& F, Index ell);
};

/// Phi^T Op (Phi (x) Phi) by contracting stored nonzeros, never forming Phi (x) Phi.
Matrix contract_quadratic(const SparseMatrix& op, const Matrix& phi);
/// Op (Phi (x) Phi) as an N x n^2 matrix.
Matrix quadratic_image(const SparseMatrix& op, const Matrix& phi);
/// Op (Phi (x) Phi (x) Phi) as an N x n^3 matrix.
Matrix cubic_image(const SparseMatrix& op, const Matrix& phi);
/// Op (I_{N_u} (x) Phi) as an N x N_u n matrix.
Matrix bilinear_image(const SparseMatrix& op, const Matrix& phi, Index n_inputs);

HrfGalerkinOperators precompute_hrf_galerkin(const PolynomialSystem& sys, const ReducedBasis& basis,
                                             double cubic_cap = 1e8);

/// Adds PtW to `ops`; throws if n^3 times the term count exceeds the cap.
void precompute_hrf_cubic(HrfGalerkinOperators& ops, const PolynomialSystem& sys,
                          const ReducedBasis& basis, double cap = 1e8);

/// N-independent Galerkin assembler over precomputed tensors (quadratic and cubic).
class HrfGalerkinAssembler : public ReducedAssembler {
 public:
  explicit HrfGalerkinAssembler(HrfGalerkinOperators ops);

  Index dim() const override { return ops_.n; }
  std::string name() const override { return "hrf-g"; }
  void prepare(const ParamVector& mu) override;
  void begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                  std::span<const Vector> inputs) override;
  void assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) override;

  const HrfGalerkinOperators& operators() const { return ops_; }

 private:
  /// Reduced f at (xhat, u) with collapsed operators.
  void reduced_rhs(const Vector& xhat, const Vector& u, Vector& out);

  HrfGalerkinOperators ops_;
  bool prepared_ = false;
  bool has_c_ = false, has_f_ = false, has_n_ = false, has_w_ = false;
  Vector c_;
  Matrix a_, f_, b_, n_, w_;
  // Per step.
  Matrix lin_;     // A + N (u^m (x) I)
  Vector const_;   // C + B u^m
  Vector history_part_;
  double alpha0_ = 1.0;
  double scale_ = 0.0;
  Vector kk_, kkk_, fr_;
  Matrix jac_;
};

/// Kinds of dictionary columns. The reduced LSPG residual is Jt = D Jcoef and
/// r = D rcoef with D = [Phi | C | A Phi | F (Phi (x) Phi) | B | N (I (x) Phi) | W (Phi (x) Phi (x) Phi)],
/// one group per affine term.
enum class DictKind { P, C, A, F, B, N, W };

struct DictGroup {
  DictKind kind;
  AffineScalar theta;
  Index offset;
  Index size;
};

/// Every precomputed LSPG tensor is a block of the Gram matrix K = D^T D; e.g.
/// block(F, F) = (Phi (x) Phi)^T F^T F (Phi (x) Phi), block(A, F) = Phi^T A^T F (Phi (x) Phi).
struct HrfLspgOperators {
  Index n = 0;
  Index n_inputs = 0;
  std::vector<DictGroup> groups;
  Matrix K;

  /// Block between the first groups of the given kinds (term 0 of each).
  Eigen::Block<const Matrix> block(DictKind row, DictKind col, std::size_t row_term = 0,
                                   std::size_t col_term = 0) const;
  const DictGroup& group(DictKind kind, std::size_t term = 0) const;
};

class MemoryCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Refuses (MemoryCapExceeded) when the Gram matrix would have more than `cap`
/// entries; that count is of order n^4 for quadratic systems and n^6 for cubic ones.
HrfLspgOperators precompute_hrf_lspg(const PolynomialSystem& sys, const ReducedBasis& basis,
                                     double cap = 1e8);

class HrfLspgAssembler : public ReducedAssembler {
 public:
  explicit HrfLspgAssembler(HrfLspgOperators ops);

  Index dim() const override { return ops_.n; }
  std::string name() const override { return "hrf-lspg"; }
  void prepare(const ParamVector& mu) override;
  void begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                  std::span<const Vector> inputs) override;
  void assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) override;

 private:
  HrfLspgOperators ops_;
  bool prepared_ = false;
  // Collapsed layout: offsets into the mu-specific dictionary, -1 when absent.
  Index oc_ = -1, oa_ = -1, of_ = -1, ob_ = -1, on_ = -1, ow_ = -1;
  Index d_ = 0;
  Matrix k_;
  Vector rcoef_hist_;
  Vector u_;
  double alpha0_ = 1.0;
  double scale_ = 0.0;
  Vector rcoef_;
  Matrix kj_;
};

/// One-shot assembly helpers: prepare, begin_step and assemble in one call.
void assemble_hrf_galerkin(const HrfGalerkinOperators& ops, const MultistepScheme& scheme,
                           const Vector& xhat, std::span<const Vector> history,
                           std::span<const Vector> inputs, const ParamVector& mu, Matrix& lhs,
                           Vector& rhs);
void assemble_hrf_lspg(const HrfLspgOperators& ops, const MultistepScheme& scheme,
                       const Vector& xhat, std::span<const Vector> history,
                       std::span<const Vector> inputs, const ParamVector& mu, Matrix& lhs,
                       Vector& rhs);

}  // namespace polyrom
