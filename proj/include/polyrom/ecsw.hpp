#pragma once

#include "polyrom/basis.hpp"
#include "polyrom/kernel.hpp"
#include "polyrom/nnls.hpp"
#include "polyrom/romref.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace polyrom {

enum class Projection { Galerkin, Lspg };

std::string to_string(Projection p);
Projection projection_from_string(const std::string& s);

/// One training residual: projected FOM state at step m and its history.
struct ResidualSnapshot {
  std::size_t run = 0;            // index into the training trajectory list
  Index step = 0;                 // m
  Vector xhat;                    // Phi^T x^m
  std::vector<Vector> history;    // Phi^T x^{m-1}, ..., Phi^T x^{m-steps}
  std::vector<Vector> inputs;     // u^m, ..., u^{m-steps}
};

struct ResidualSnapshotSet {
  std::vector<ResidualSnapshot> snapshots;
  std::vector<ParamVector> mus;  // mu of each training run
  Index available = 0;

  std::size_t count() const { return snapshots.size(); }
};

/// Projects training trajectories and samples `count` steps uniformly without
/// replacement (mt19937_64 seeded with `seed`). count = available keeps every step.
ResidualSnapshotSet collect_residual_snapshots(const PolynomialSystem& sys,
                                               const ReducedBasis& basis,
                                               const MultistepScheme& scheme,
                                               const std::vector<Trajectory>& training,
                                               std::size_t count, std::uint64_t seed);

struct NnlsSystem {
  Matrix G;  // (n T) x N
  Vector b;  // G 1
};

/// Dense G and b. Galerkin samples only the -dt sum beta_j f rows (the alpha terms
/// are exact through Phi^T Phi); LSPG samples the per-row product of the test
/// basis Psi_t = (alpha_0 I - dt beta_0 df/dx) Phi and the full residual.
NnlsSystem build_nnls_system(const PolynomialSystem& sys, const ReducedBasis& basis,
                             const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                             Projection projection);

/// Same rows as build_nnls_system streamed into the triangular factor of [G | b].
Matrix compressed_nnls_factor(const PolynomialSystem& sys, const ReducedBasis& basis,
                              const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                              Projection projection, Index chunk_rows = 4096);

struct EcswWeights {
  std::vector<Index> sample_indices;
  std::vector<double> weights;
  double training_residual_ratio = 1.0;
  double eps_ecsw = 0.0;
  int nnls_iterations = 0;

  std::size_t size() const { return sample_indices.size(); }
};

EcswWeights nnls(const Matrix& G, const Vector& b, double eps_ecsw);
/// NNLS on a factor from compressed_nnls_factor (last column is b).
EcswWeights nnls_from_factor(const Matrix& factor, double eps_ecsw);

EcswWeights train_ecsw(const PolynomialSystem& sys, const ReducedBasis& basis,
                       const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                       Projection projection, double eps_ecsw);

void write_weights(std::ostream& os, const EcswWeights& w);
EcswWeights read_weights(std::istream& is);

/// Sampled-row assembler. Rows outside the sample set are never touched; the state
/// is reconstructed only on the union of the sampled rows' stencils.
class EcswAssembler : public ReducedAssembler {
 public:
  EcswAssembler(const PolynomialSystem& sys, const ReducedBasis& basis, EcswWeights weights,
                Projection projection);

  Index dim() const override { return phi_s_.cols(); }
  std::string name() const override {
    return projection_ == Projection::Galerkin ? "ecsw-g" : "ecsw-lspg";
  }
  void prepare(const ParamVector& mu) override;
  void begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                  std::span<const Vector> inputs) override;
  void assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) override;

  std::size_t sampled_rows() const { return rows_.size(); }
  std::size_t neighborhood_size() const { return union_.size(); }

 private:
  const PolynomialSystem* sys_;
  Projection projection_;
  std::vector<Index> rows_;
  std::vector<Index> union_;
  Vector omega_;
  Matrix phi_s_;  // basis rows at sampled indices
  Matrix phi_u_;  // basis rows on the stencil union
  Matrix ptp_;
  std::vector<KernelTerm> terms_;  // restricted to rows_ x union_
  std::unique_ptr<PolynomialKernel> kernel_;
  // Per step.
  Vector hist_exact_;    // Galerkin: sum_{j>=1} alpha_j PtP xhat_j
  Vector hist_rows_;     // sampled rows: sum_{j>=1} alpha_j Phi_s xhat_j - dt beta_j f_s
  Vector u_;
  double alpha0_ = 1.0;
  double scale_ = 0.0;
  Vector xu_, fs_;
};

}  // namespace polyrom
