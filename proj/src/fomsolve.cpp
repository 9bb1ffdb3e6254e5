#include "polyrom/fomsolve.hpp"

#include <cmath>

namespace polyrom {

void MultistepScheme::validate() const {
  if (steps < 1) throw std::invalid_argument("multistep scheme needs at least one step");
  if (alphas.size() != static_cast<std::size_t>(steps + 1) ||
      betas.size() != static_cast<std::size_t>(steps + 1)) {
    throw std::invalid_argument("multistep scheme needs steps+1 alphas and betas");
  }
  if (alphas[0] == 0.0) throw std::invalid_argument("alpha_0 must be nonzero");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
}

MultistepScheme MultistepScheme::startup() const {
  if (steps == 1) return *this;
  return backward_euler(dt);
}

MultistepScheme backward_euler(double dt) { return {1, {1.0, -1.0}, {1.0, 0.0}, dt, "backward-euler"}; }

MultistepScheme crank_nicolson(double dt) {
  return {1, {1.0, -1.0}, {0.5, 0.5}, dt, "crank-nicolson"};
}

MultistepScheme scheme_by_name(const std::string& name, double dt) {
  if (name == "backward-euler" || name == "be") return backward_euler(dt);
  if (name == "crank-nicolson" || name == "cn") return crank_nicolson(dt);
  throw std::invalid_argument("unknown time scheme '" + name + "'");
}

Vector fom_residual(const PolynomialSystem& sys, const MultistepScheme& scheme,
                    std::span<const Vector> history, std::span<const Vector> inputs,
                    const ParamVector& mu) {
  scheme.validate();
  const auto len = static_cast<std::size_t>(scheme.steps + 1);
  if (history.size() != len || inputs.size() != len) {
    throw DimensionError("fom_residual: history and inputs need steps+1 entries");
  }
  const PolynomialKernel kernel(sys, mu);
  Vector r = Vector::Zero(sys.dim_state);
  for (std::size_t j = 0; j < len; ++j) {
    if (history[j].size() != sys.dim_state) throw DimensionError("fom_residual: state length");
    r += scheme.alphas[j] * history[j];
    if (scheme.betas[j] != 0.0) r -= scheme.dt * scheme.betas[j] * kernel.rhs(history[j], inputs[j]);
  }
  return r;
}

Eigen::SparseMatrix<double> fom_residual_jacobian(const PolynomialSystem& sys,
                                                  const MultistepScheme& scheme, const Vector& x_m,
                                                  const Vector& u_m, const ParamVector& mu) {
  scheme.validate();
  if (x_m.size() != sys.dim_state || u_m.size() != sys.dim_input) {
    throw DimensionError("fom_residual_jacobian: dimension mismatch");
  }
  const PolynomialKernel kernel(sys, mu);
  JacobianWorkspace ws(kernel);
  return ws.assemble(x_m, u_m, scheme.alphas[0], -scheme.dt * scheme.betas[0]);
}

FullOrderStepper::FullOrderStepper(const PolynomialSystem& sys, const ParamVector& mu)
    : kernel_(sys, mu), workspace_(kernel_) {}

namespace {

struct FullProblem {
  const PolynomialKernel& kernel;
  JacobianWorkspace& ws;
  Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu;
  bool& analyzed;
  const Vector& history_part;
  const Vector& u;
  double alpha0;
  double scale;  // -dt beta_0
  Vector r;
  Vector f;
  Vector x;

  double evaluate(const Vector& xk) {
    x = xk;
    kernel.rhs_into(x, u, f);
    r = alpha0 * x + scale * f + history_part;
    return r.norm();
  }

  Vector direction() {
    const auto& jac = ws.assemble(x, u, alpha0, scale);
    if (!analyzed) {
      lu.analyzePattern(jac);
      analyzed = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw SingularSystem("full-order Jacobian is singular");
    Vector p = lu.solve(-r);
    if (lu.info() != Eigen::Success) throw SingularSystem("full-order linear solve failed");
    return p;
  }
};

}  // namespace

NewtonResult FullOrderStepper::step(const MultistepScheme& scheme, const NewtonSettings& settings,
                                    std::span<const Vector> history,
                                    std::span<const Vector> inputs) {
  const auto tau = static_cast<std::size_t>(scheme.steps);
  if (history.size() != tau || inputs.size() != tau + 1) {
    throw DimensionError("full-order step: history needs steps entries, inputs steps+1");
  }
  const Index n = kernel_.rows();
  Vector hist = Vector::Zero(n);
  Vector f(n);
  for (std::size_t j = 1; j <= tau; ++j) {
    hist += scheme.alphas[j] * history[j - 1];
    if (scheme.betas[j] != 0.0) {
      kernel_.rhs_into(history[j - 1], inputs[j], f);
      hist -= scheme.dt * scheme.betas[j] * f;
    }
  }
  const double alpha0 = scheme.alphas[0];
  if (!scheme.implicit()) {
    NewtonResult out;
    out.x = -hist / alpha0;
    return out;
  }
  FullProblem problem{kernel_, workspace_, lu_, analyzed_, hist, inputs[0], alpha0,
                      -scheme.dt * scheme.betas[0], {}, {}, {}};
  return newton_solve(problem, history[0], settings);
}

NewtonResult fom_newton_step(const PolynomialSystem& sys, const MultistepScheme& scheme,
                             const NewtonSettings& settings, std::span<const Vector> history,
                             std::span<const Vector> inputs, const ParamVector& mu) {
  scheme.validate();
  FullOrderStepper stepper(sys, mu);
  return stepper.step(scheme, settings, history, inputs);
}

Trajectory integrate_fom(const PolynomialSystem& sys, const MultistepScheme& scheme,
                         const NewtonSettings& settings, const ParamVector& mu, Index n_steps) {
  scheme.validate();
  if (n_steps < 1) throw std::invalid_argument("integrate_fom needs at least one step");
  Trajectory traj;
  traj.dt = scheme.dt;
  traj.mu = mu;
  traj.model = sys.name;
  traj.scheme = scheme.name;
  traj.states.resize(sys.dim_state, n_steps + 1);
  traj.states.col(0) = sys.initial(mu);
  traj.iterations.reserve(static_cast<std::size_t>(n_steps));

  FullOrderStepper stepper(sys, mu);
  const MultistepScheme start = scheme.startup();
  std::vector<Vector> history;
  std::vector<Vector> inputs;
  for (Index m = 1; m <= n_steps; ++m) {
    const MultistepScheme& active = m < scheme.steps ? start : scheme;
    const int tau = active.steps;
    history.clear();
    inputs.clear();
    inputs.push_back(sys.input(m * scheme.dt, mu));
    for (int j = 1; j <= tau; ++j) {
      history.push_back(traj.states.col(m - j));
      inputs.push_back(sys.input((m - j) * scheme.dt, mu));
    }
    try {
      NewtonResult res = stepper.step(active, settings, history, inputs);
      traj.states.col(m) = res.x;
      traj.iterations.push_back(res.iterations);
    } catch (const NonConvergence& e) {
      throw NonConvergence("full-order step " + std::to_string(m) + ": " + e.what(), m,
                           e.iterations(), e.residual());
    }
  }
  return traj;
}

}  // namespace polyrom
