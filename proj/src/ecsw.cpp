#include "polyrom/ecsw.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace polyrom {

std::string to_string(Projection p) { return p == Projection::Galerkin ? "galerkin" : "lspg"; }

Projection projection_from_string(const std::string& s) {
  if (s == "galerkin" || s == "g") return Projection::Galerkin;
  if (s == "lspg") return Projection::Lspg;
  throw std::invalid_argument("unknown projection '" + s + "'");
}

ResidualSnapshotSet collect_residual_snapshots(const PolynomialSystem& sys,
                                               const ReducedBasis& basis,
                                               const MultistepScheme& scheme,
                                               const std::vector<Trajectory>& training,
                                               std::size_t count, std::uint64_t seed) {
  if (training.empty()) throw std::invalid_argument("no training trajectories");
  const Matrix& phi = basis.phi;
  const int tau = scheme.steps;
  std::vector<std::pair<std::size_t, Index>> candidates;
  ResidualSnapshotSet set;
  for (std::size_t r = 0; r < training.size(); ++r) {
    const auto& t = training[r];
    if (t.states.rows() != phi.rows()) throw DimensionError("training states do not match basis");
    set.mus.push_back(t.mu);
    for (Index m = tau; m < t.states.cols(); ++m) candidates.emplace_back(r, m);
  }
  set.available = static_cast<Index>(candidates.size());
  if (count > candidates.size()) {
    throw std::invalid_argument("requested " + std::to_string(count) + " residual snapshots but only " +
                                std::to_string(candidates.size()) + " are available");
  }
  std::vector<std::pair<std::size_t, Index>> chosen;
  if (count == candidates.size()) {
    chosen = candidates;
  } else {
    std::mt19937_64 rng(seed);
    chosen.reserve(count);
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(chosen), count, rng);
  }
  set.snapshots.reserve(chosen.size());
  for (const auto& [r, m] : chosen) {
    const auto& t = training[r];
    ResidualSnapshot s;
    s.run = r;
    s.step = m;
    s.xhat = phi.transpose() * t.states.col(m);
    s.inputs.push_back(sys.input(m * scheme.dt, t.mu));
    for (int j = 1; j <= tau; ++j) {
      s.history.push_back(phi.transpose() * t.states.col(m - j));
      s.inputs.push_back(sys.input((m - j) * scheme.dt, t.mu));
    }
    set.snapshots.push_back(std::move(s));
  }
  return set;
}

namespace {

// Row generator shared by the dense and streamed builders: writes the n x N block
// of snapshot t (and its row sums into the last column when `with_b`).
class NnlsRowBuilder {
 public:
  NnlsRowBuilder(const PolynomialSystem& sys, const ReducedBasis& basis,
                 const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                 Projection projection)
      : sys_(sys), phi_(basis.phi), scheme_(scheme), snaps_(snaps), projection_(projection),
        kernels_(snaps.mus.size()) {}

  Index block_rows() const { return phi_.cols(); }

  void fill(std::size_t t, Eigen::Ref<Matrix> out) {
    const auto& s = snaps_.snapshots[t];
    const PolynomialKernel& k = kernel(s.run);
    const Index big = phi_.rows();
    const Index n = phi_.cols();
    const double dt = scheme_.dt;
    Vector rho = Vector::Zero(big);
    Vector x(big), f(big);
    for (std::size_t j = 0; j < s.inputs.size(); ++j) {
      const Vector& xh = j == 0 ? s.xhat : s.history[j - 1];
      x.noalias() = phi_ * xh;
      if (projection_ == Projection::Lspg) rho += scheme_.alphas[j] * x;
      if (scheme_.betas[j] != 0.0) {
        k.rhs_into(x, s.inputs[j], f);
        rho -= dt * scheme_.betas[j] * f;
      }
    }
    if (projection_ == Projection::Galerkin) {
      for (Index r = 0; r < big; ++r) out.col(r).head(n) = rho(r) * phi_.row(r).transpose();
    } else {
      x.noalias() = phi_ * s.xhat;
      JacobianWorkspace& ws = workspace(s.run);
      const auto& jac = ws.assemble(x, s.inputs[0], scheme_.alphas[0], -dt * scheme_.betas[0]);
      const Matrix psi = jac * phi_;
      for (Index r = 0; r < big; ++r) out.col(r).head(n) = rho(r) * psi.row(r).transpose();
    }
    if (out.cols() > big) out.col(big) = out.leftCols(big).rowwise().sum();
  }

 private:
  const PolynomialKernel& kernel(std::size_t run) {
    if (!kernels_[run]) kernels_[run] = std::make_unique<PolynomialKernel>(sys_, snaps_.mus[run]);
    return *kernels_[run];
  }

  JacobianWorkspace& workspace(std::size_t run) {
    const PolynomialKernel& k = kernel(run);
    if (!workspaces_.count(run)) workspaces_.emplace(run, std::make_unique<JacobianWorkspace>(k));
    return *workspaces_.at(run);
  }

  const PolynomialSystem& sys_;
  const Matrix& phi_;
  const MultistepScheme& scheme_;
  const ResidualSnapshotSet& snaps_;
  Projection projection_;
  std::vector<std::unique_ptr<PolynomialKernel>> kernels_;
  std::map<std::size_t, std::unique_ptr<JacobianWorkspace>> workspaces_;
};

}  // namespace

NnlsSystem build_nnls_system(const PolynomialSystem& sys, const ReducedBasis& basis,
                             const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                             Projection projection) {
  NnlsRowBuilder builder(sys, basis, scheme, snaps, projection);
  const Index n = builder.block_rows();
  const Index big = sys.dim_state;
  Matrix gb(n * static_cast<Index>(snaps.count()), big + 1);
  for (std::size_t t = 0; t < snaps.count(); ++t)
    builder.fill(t, gb.middleRows(static_cast<Index>(t) * n, n));
  NnlsSystem out;
  out.G = gb.leftCols(big);
  out.b = gb.col(big);
  return out;
}

Matrix compressed_nnls_factor(const PolynomialSystem& sys, const ReducedBasis& basis,
                              const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                              Projection projection, Index chunk_rows) {
  NnlsRowBuilder builder(sys, basis, scheme, snaps, projection);
  const Index n = builder.block_rows();
  const Index big = sys.dim_state;
  const Index per_chunk = std::max<Index>(1, chunk_rows / std::max<Index>(1, n));
  StackedQr qr(big + 1);
  const auto total = static_cast<Index>(snaps.count());
  Matrix chunk;
  for (Index start = 0; start < total; start += per_chunk) {
    const Index count = std::min(per_chunk, total - start);
    chunk.resize(count * n, big + 1);
    for (Index t = 0; t < count; ++t)
      builder.fill(static_cast<std::size_t>(start + t), chunk.middleRows(t * n, n));
    qr.add_rows(chunk);
  }
  return qr.factor();
}

namespace {

EcswWeights to_weights(const NnlsResult& r, double eps) {
  EcswWeights w;
  w.sample_indices = r.support;
  w.weights = r.weights;
  w.training_residual_ratio = r.residual_ratio;
  w.eps_ecsw = eps;
  w.nnls_iterations = r.iterations;
  return w;
}

}  // namespace

EcswWeights nnls_from_factor(const Matrix& factor, double eps_ecsw) {
  const Index cols = factor.cols() - 1;
  return to_weights(lawson_hanson(factor.leftCols(cols), factor.col(cols), eps_ecsw), eps_ecsw);
}

EcswWeights nnls(const Matrix& G, const Vector& b, double eps_ecsw) {
  if (G.rows() != b.size()) throw DimensionError("nnls: G and b row counts differ");
  if (G.rows() <= G.cols() + 1) return to_weights(lawson_hanson(G, b, eps_ecsw), eps_ecsw);
  Matrix gb(G.rows(), G.cols() + 1);
  gb << G, b;
  StackedQr qr(G.cols() + 1);
  qr.add_rows(gb);
  return nnls_from_factor(qr.factor(), eps_ecsw);
}

EcswWeights train_ecsw(const PolynomialSystem& sys, const ReducedBasis& basis,
                       const MultistepScheme& scheme, const ResidualSnapshotSet& snaps,
                       Projection projection, double eps_ecsw) {
  return nnls_from_factor(compressed_nnls_factor(sys, basis, scheme, snaps, projection), eps_ecsw);
}

void write_weights(std::ostream& os, const EcswWeights& w) {
  os << std::setprecision(17);
  os << "eps_ecsw " << w.eps_ecsw << '\n';
  os << "ratio " << w.training_residual_ratio << '\n';
  os << "count " << w.sample_indices.size() << '\n';
  for (std::size_t k = 0; k < w.sample_indices.size(); ++k)
    os << w.sample_indices[k] << ' ' << w.weights[k] << '\n';
}

EcswWeights read_weights(std::istream& is) {
  EcswWeights w;
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> w.eps_ecsw) || tag != "eps_ecsw") throw std::runtime_error("weights: bad eps line");
  if (!(is >> tag >> w.training_residual_ratio) || tag != "ratio")
    throw std::runtime_error("weights: bad ratio line");
  if (!(is >> tag >> count) || tag != "count") throw std::runtime_error("weights: bad count line");
  for (std::size_t k = 0; k < count; ++k) {
    Index i = 0;
    double v = 0.0;
    if (!(is >> i >> v)) throw std::runtime_error("weights: truncated entries");
    w.sample_indices.push_back(i);
    w.weights.push_back(v);
  }
  return w;
}

EcswAssembler::EcswAssembler(const PolynomialSystem& sys, const ReducedBasis& basis,
                             EcswWeights weights, Projection projection)
    : sys_(&sys), projection_(projection), rows_(weights.sample_indices) {
  const Matrix& phi = basis.phi;
  if (phi.rows() != sys.dim_state) throw DimensionError("basis rows do not match the system");
  if (rows_.size() != weights.weights.size()) throw DimensionError("weights and indices differ in length");
  std::set<Index> u;
  for (Index s : rows_) {
    if (s < 0 || s >= sys.dim_state) throw DimensionError("sample index out of range");
    u.insert(sys.stencil[s].begin(), sys.stencil[s].end());
  }
  union_.assign(u.begin(), u.end());
  omega_ = Eigen::Map<const Vector>(weights.weights.data(), static_cast<Index>(weights.weights.size()));
  phi_s_.resize(static_cast<Index>(rows_.size()), phi.cols());
  for (std::size_t k = 0; k < rows_.size(); ++k) phi_s_.row(k) = phi.row(rows_[k]);
  phi_u_.resize(static_cast<Index>(union_.size()), phi.cols());
  for (std::size_t k = 0; k < union_.size(); ++k) phi_u_.row(k) = phi.row(union_[k]);
  ptp_ = phi.transpose() * phi;
  for (auto& term : kernel_terms(sys)) {
    terms_.push_back({term.theta, term.kernel.restrict_rows(rows_, union_)});
  }
}

void EcswAssembler::prepare(const ParamVector& mu) {
  if (terms_.empty()) {
    kernel_ = std::make_unique<PolynomialKernel>();
    return;
  }
  kernel_ = std::make_unique<PolynomialKernel>(combine_kernel_terms(terms_, mu));
}

void EcswAssembler::begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                               std::span<const Vector> inputs) {
  if (!kernel_) throw std::logic_error("assembler used before prepare()");
  const Index n = dim();
  const auto ns = static_cast<Index>(rows_.size());
  hist_exact_ = Vector::Zero(n);
  hist_rows_ = Vector::Zero(ns);
  for (std::size_t j = 1; j < inputs.size(); ++j) {
    const Vector& xh = history[j - 1];
    if (projection_ == Projection::Galerkin) {
      hist_exact_.noalias() += scheme.alphas[j] * (ptp_ * xh);
    } else {
      hist_rows_.noalias() += scheme.alphas[j] * (phi_s_ * xh);
    }
    if (scheme.betas[j] != 0.0 && ns > 0) {
      xu_.noalias() = phi_u_ * xh;
      kernel_->rhs_into(xu_, inputs[j], fs_);
      hist_rows_ -= scheme.dt * scheme.betas[j] * fs_;
    }
  }
  u_ = inputs[0];
  alpha0_ = scheme.alphas[0];
  scale_ = -scheme.dt * scheme.betas[0];
}

void EcswAssembler::assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) {
  const Index n = dim();
  const auto ns = static_cast<Index>(rows_.size());
  Matrix jphi;
  if (ns > 0) {
    xu_.noalias() = phi_u_ * xhat;
    kernel_->rhs_into(xu_, u_, fs_);
    jphi = kernel_->jacobian_times(xu_, u_, phi_u_);
  } else {
    fs_.resize(0);
    jphi.resize(0, n);
  }
  if (projection_ == Projection::Galerkin) {
    const Vector rho = scale_ * fs_ + hist_rows_;
    lhs = alpha0_ * ptp_;
    rhs = alpha0_ * (ptp_ * xhat) + hist_exact_;
    if (ns > 0) {
      lhs.noalias() += scale_ * (phi_s_.transpose() * omega_.asDiagonal() * jphi);
      rhs.noalias() += phi_s_.transpose() * omega_.cwiseProduct(rho);
    }
  } else {
    const Matrix jt = alpha0_ * phi_s_ + scale_ * jphi;
    const Vector r = alpha0_ * (phi_s_ * xhat) + scale_ * fs_ + hist_rows_;
    lhs.noalias() = jt.transpose() * omega_.asDiagonal() * jt;
    rhs.noalias() = jt.transpose() * omega_.cwiseProduct(r);
  }
}

}  // namespace polyrom
