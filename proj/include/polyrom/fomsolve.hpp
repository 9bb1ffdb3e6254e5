#pragma once

#include "polyrom/kernel.hpp"
#include "polyrom/polysys.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyrom {

/// sum_j alpha_j x^{m-j} - dt sum_j beta_j f(x^{m-j}, u^{m-j}), j = 0..steps.
struct MultistepScheme {
  int steps = 1;
  std::vector<double> alphas;
  std::vector<double> betas;
  double dt = 1e-3;
  std::string name;

  bool implicit() const { return betas.at(0) != 0.0; }
  void validate() const;
  /// Single-step member of the family used to fill the history when steps > 1.
  MultistepScheme startup() const;
};

MultistepScheme backward_euler(double dt = 1e-3);
MultistepScheme crank_nicolson(double dt = 1e-3);
MultistepScheme scheme_by_name(const std::string& name, double dt);

struct NewtonSettings {
  double step_length = 1.0;
  double tol = 1e-6;
  int max_iter = 25;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, Index step, int iterations, double residual)
      : std::runtime_error(what), step_(step), iterations_(iterations), residual_(residual) {}

  Index step() const { return step_; }
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  Index step_;
  int iterations_;
  double residual_;
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NewtonResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped Newton loop shared by the full and reduced solvers. `problem.evaluate(x)`
/// refreshes the residual (and whatever the linear solve needs) and returns its
/// norm; `problem.direction()` returns the step p solving J p = -r. The iteration
/// count is the number of linear solves taken.
template <class Problem>
NewtonResult newton_solve(Problem& problem, Vector x, const NewtonSettings& settings) {
  NewtonResult out;
  double norm = problem.evaluate(x);
  int k = 0;
  while (!(norm < settings.tol)) {
    if (k >= settings.max_iter || !std::isfinite(norm)) {
      throw NonConvergence("newton did not converge: |r| = " + std::to_string(norm) + " after " +
                               std::to_string(k) + " iterations",
                           -1, k, norm);
    }
    x += settings.step_length * problem.direction();
    ++k;
    norm = problem.evaluate(x);
  }
  out.x = std::move(x);
  out.iterations = k;
  out.residual = norm;
  return out;
}

struct Trajectory {
  Matrix states;  // column m is the state at t_m = m dt
  double dt = 0.0;
  ParamVector mu;
  std::string model;
  std::string scheme;
  std::vector<int> iterations;  // Newton iterations per step

  Index steps() const { return states.cols() - 1; }
};

/// history = [x^m, x^{m-1}, ..., x^{m-steps}], inputs aligned with history.
Vector fom_residual(const PolynomialSystem& sys, const MultistepScheme& scheme,
                    std::span<const Vector> history, std::span<const Vector> inputs,
                    const ParamVector& mu);

/// alpha_0 I - dt beta_0 df/dx at (x_m, u_m).
Eigen::SparseMatrix<double> fom_residual_jacobian(const PolynomialSystem& sys,
                                                  const MultistepScheme& scheme, const Vector& x_m,
                                                  const Vector& u_m, const ParamVector& mu);

/// Time stepper for one (system, mu): precomputes the kernel and Jacobian pattern once.
class FullOrderStepper {
 public:
  FullOrderStepper(const PolynomialSystem& sys, const ParamVector& mu);

  /// Solves for x^m. `history` = [x^{m-1}, ..., x^{m-steps}], `inputs` = [u^m, ..., u^{m-steps}].
  NewtonResult step(const MultistepScheme& scheme, const NewtonSettings& settings,
                    std::span<const Vector> history, std::span<const Vector> inputs);

  const PolynomialKernel& kernel() const { return kernel_; }

 private:
  PolynomialKernel kernel_;
  JacobianWorkspace workspace_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
};

NewtonResult fom_newton_step(const PolynomialSystem& sys, const MultistepScheme& scheme,
                             const NewtonSettings& settings, std::span<const Vector> history,
                             std::span<const Vector> inputs, const ParamVector& mu);

/// Full trajectory from x_0(mu). NonConvergence carries the failing step index.
Trajectory integrate_fom(const PolynomialSystem& sys, const MultistepScheme& scheme,
                         const NewtonSettings& settings, const ParamVector& mu, Index n_steps);

}  // namespace polyrom
