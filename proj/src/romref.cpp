#include "polyrom/romref.hpp"

#include <limits>

#include <Eigen/LU>

namespace polyrom {

namespace {

struct ReducedProblem {
  ReducedAssembler& assembler;
  Matrix lhs;
  Vector rhs;

  double evaluate(const Vector& x) {
    assembler.assemble(x, lhs, rhs);
    return rhs.norm();
  }

  Vector direction() {
    Eigen::PartialPivLU<Matrix> lu(lhs);
    const double rcond = lu.rcond();
    if (!(rcond * kMaxReducedCondition > 1.0)) {
      throw SingularSystem(assembler.name() + ": reduced Newton matrix is singular or "
                           "ill-conditioned (rcond " + std::to_string(rcond) + ")");
    }
    return lu.solve(-rhs);
  }
};

}  // namespace

NewtonResult reduced_newton(ReducedAssembler& assembler, const NewtonSettings& settings,
                            const MultistepScheme& scheme, std::span<const Vector> history,
                            std::span<const Vector> inputs) {
  const auto tau = static_cast<std::size_t>(scheme.steps);
  if (history.size() != tau || inputs.size() != tau + 1) {
    throw DimensionError("reduced step: history needs steps entries, inputs steps+1");
  }
  for (const auto& h : history)
    if (h.size() != assembler.dim()) throw DimensionError("reduced history has wrong length");
  assembler.begin_step(scheme, history, inputs);
  ReducedProblem problem{assembler, {}, {}};
  return newton_solve(problem, history[0], settings);
}

GalerkinReferenceAssembler::GalerkinReferenceAssembler(const PolynomialSystem& sys,
                                                       const ReducedBasis& basis)
    : sys_(&sys), phi_(basis.phi) {
  if (phi_.rows() != sys.dim_state) throw DimensionError("basis rows do not match the system");
}

void GalerkinReferenceAssembler::prepare(const ParamVector& mu) {
  workspace_.reset();
  kernel_ = std::make_unique<PolynomialKernel>(*sys_, mu);
  workspace_ = std::make_unique<JacobianWorkspace>(*kernel_);
}

void GalerkinReferenceAssembler::begin_step(const MultistepScheme& scheme,
                                            std::span<const Vector> history,
                                            std::span<const Vector> inputs) {
  if (!kernel_) throw std::logic_error("assembler used before prepare()");
  const Index n = sys_->dim_state;
  history_part_ = Vector::Zero(n);
  Vector x(n), f(n);
  for (std::size_t j = 1; j < inputs.size(); ++j) {
    x.noalias() = phi_ * history[j - 1];
    history_part_ += scheme.alphas[j] * x;
    if (scheme.betas[j] != 0.0) {
      kernel_->rhs_into(x, inputs[j], f);
      history_part_ -= scheme.dt * scheme.betas[j] * f;
    }
  }
  u_ = inputs[0];
  alpha0_ = scheme.alphas[0];
  scale_ = -scheme.dt * scheme.betas[0];
}

void GalerkinReferenceAssembler::full_order(const Vector& xhat) {
  x_.noalias() = phi_ * xhat;
  kernel_->rhs_into(x_, u_, f_);
  r_ = alpha0_ * x_ + scale_ * f_ + history_part_;
  const auto& jac = workspace_->assemble(x_, u_, alpha0_, scale_);
  jphi_.noalias() = jac * phi_;
}

void GalerkinReferenceAssembler::assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) {
  full_order(xhat);
  lhs.noalias() = phi_.transpose() * jphi_;
  rhs.noalias() = phi_.transpose() * r_;
}

void LspgReferenceAssembler::assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) {
  full_order(xhat);
  lhs.noalias() = jphi_.transpose() * jphi_;
  rhs.noalias() = jphi_.transpose() * r_;
}

std::unique_ptr<ReducedAssembler> galerkin_reference_assembler(const PolynomialSystem& sys,
                                                               const ReducedBasis& basis) {
  return std::make_unique<GalerkinReferenceAssembler>(sys, basis);
}

std::unique_ptr<ReducedAssembler> lspg_reference_assembler(const PolynomialSystem& sys,
                                                           const ReducedBasis& basis) {
  return std::make_unique<LspgReferenceAssembler>(sys, basis);
}

Matrix integrate_reduced(ReducedAssembler& assembler, const PolynomialSystem& sys,
                         const MultistepScheme& scheme, const NewtonSettings& settings,
                         const ParamVector& mu, const Vector& xhat0, Index n_steps,
                         std::vector<int>* iterations) {
  scheme.validate();
  if (n_steps < 0) throw std::invalid_argument("negative step count");
  if (xhat0.size() != assembler.dim()) throw DimensionError("reduced initial state length");
  Matrix xhat(assembler.dim(), n_steps + 1);
  xhat.col(0) = xhat0;
  const MultistepScheme start = scheme.startup();
  std::vector<Vector> history;
  std::vector<Vector> inputs;
  for (Index m = 1; m <= n_steps; ++m) {
    const MultistepScheme& active = m < scheme.steps ? start : scheme;
    history.clear();
    inputs.clear();
    inputs.push_back(sys.input(m * scheme.dt, mu));
    for (int j = 1; j <= active.steps; ++j) {
      history.push_back(xhat.col(m - j));
      inputs.push_back(sys.input((m - j) * scheme.dt, mu));
    }
    try {
      NewtonResult res = reduced_newton(assembler, settings, active, history, inputs);
      xhat.col(m) = res.x;
      if (iterations) iterations->push_back(res.iterations);
    } catch (const NonConvergence& e) {
      throw NonConvergence(assembler.name() + " step " + std::to_string(m) + ": " + e.what(), m,
                           e.iterations(), e.residual());
    } catch (const SingularSystem& e) {
      throw NonConvergence(assembler.name() + " step " + std::to_string(m) + ": " + e.what(), m, 0,
                           std::numeric_limits<double>::quiet_NaN());
    }
  }
  return xhat;
}

RomRun run_rom(ReducedAssembler& assembler, const ReducedBasis& basis, const PolynomialSystem& sys,
               const MultistepScheme& scheme, const NewtonSettings& settings, const ParamVector& mu,
               Index n_steps) {
  if (basis.phi.rows() != sys.dim_state) throw DimensionError("basis rows do not match the system");
  RomRun run;
  const Vector xhat0 = basis.phi.transpose() * sys.initial(mu);
  assembler.prepare(mu);
  run.reduced = integrate_reduced(assembler, sys, scheme, settings, mu, xhat0, n_steps,
                                  &run.iterations);
  run.reconstructed = basis.phi * run.reduced;
  return run;
}

}  // namespace polyrom
