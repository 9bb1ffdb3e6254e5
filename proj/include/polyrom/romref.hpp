#pragma once

#include "polyrom/basis.hpp"
#include "polyrom/fomsolve.hpp"
#include "polyrom/kernel.hpp"

#include <memory>
#include <span>
#include <string>

namespace polyrom {

/// Produces the reduced Newton system (Psi^T dr/dxhat, Psi^T r) at an iterate.
/// prepare() fixes mu, begin_step() fixes the time step's history, assemble() is
/// called once per Newton iteration.
class ReducedAssembler {
 public:
  virtual ~ReducedAssembler() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;
  virtual void prepare(const ParamVector& mu) = 0;
  /// history = [xhat^{m-1}, ..., xhat^{m-steps}], inputs = [u^m, ..., u^{m-steps}].
  virtual void begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                          std::span<const Vector> inputs) = 0;
  virtual void assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) = 0;
};

/// Throws SingularSystem if the estimated condition number exceeds this.
inline constexpr double kMaxReducedCondition = 1e14;

/// One reduced time step, warm-started from history[0].
NewtonResult reduced_newton(ReducedAssembler& assembler, const NewtonSettings& settings,
                            const MultistepScheme& scheme, std::span<const Vector> history,
                            std::span<const Vector> inputs);

/// Reconstructs Phi xhat for the iterate and history and projects the full-order
/// residual and Jacobian. Cost scales with N.
class GalerkinReferenceAssembler : public ReducedAssembler {
 public:
  GalerkinReferenceAssembler(const PolynomialSystem& sys, const ReducedBasis& basis);

  Index dim() const override { return phi_.cols(); }
  std::string name() const override { return "galerkin-rom"; }
  void prepare(const ParamVector& mu) override;
  void begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                  std::span<const Vector> inputs) override;
  void assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) override;

 protected:
  /// Full-order residual and J Phi at Phi xhat.
  void full_order(const Vector& xhat);

  const PolynomialSystem* sys_;
  Matrix phi_;
  std::unique_ptr<PolynomialKernel> kernel_;
  std::unique_ptr<JacobianWorkspace> workspace_;
  Vector history_part_;
  Vector u_;
  double alpha0_ = 1.0;
  double scale_ = 0.0;
  Vector x_, f_, r_;
  Matrix jphi_;
};

/// Gauss-Newton normal equations (Jt^T Jt, Jt^T r) with Jt = J Phi.
class LspgReferenceAssembler : public GalerkinReferenceAssembler {
 public:
  using GalerkinReferenceAssembler::GalerkinReferenceAssembler;

  std::string name() const override { return "lspg-rom"; }
  void assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) override;
};

std::unique_ptr<ReducedAssembler> galerkin_reference_assembler(const PolynomialSystem& sys,
                                                               const ReducedBasis& basis);
std::unique_ptr<ReducedAssembler> lspg_reference_assembler(const PolynomialSystem& sys,
                                                           const ReducedBasis& basis);

/// Reduced time stepping from xhat0 with the assembler already prepared for mu.
/// Returns n x (n_steps + 1) reduced states; iterations per step are appended to
/// `iterations` when non-null.
Matrix integrate_reduced(ReducedAssembler& assembler, const PolynomialSystem& sys,
                         const MultistepScheme& scheme, const NewtonSettings& settings,
                         const ParamVector& mu, const Vector& xhat0, Index n_steps,
                         std::vector<int>* iterations = nullptr);

struct RomRun {
  Matrix reduced;
  Matrix reconstructed;
  std::vector<int> iterations;
};

/// xhat^0 = Phi^T x_0(mu), then sequential reduced Newton steps.
RomRun run_rom(ReducedAssembler& assembler, const ReducedBasis& basis, const PolynomialSystem& sys,
               const MultistepScheme& scheme, const NewtonSettings& settings, const ParamVector& mu,
               Index n_steps);

}  // namespace polyrom
