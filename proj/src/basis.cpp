#include "polyrom/basis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>

namespace polyrom {

SnapshotMatrix assemble_snapshots(const std::vector<Trajectory>& trajectories,
                                  bool include_initial,
                                  std::optional<std::pair<Index, Index>> rows) {
  if (trajectories.empty()) throw std::invalid_argument("no trajectories to assemble");
  const Index full = trajectories.front().states.rows();
  const Index offset = rows ? rows->first : 0;
  const Index size = rows ? rows->second : full;
  if (offset < 0 || size <= 0 || offset + size > full) {
    throw DimensionError("snapshot row block out of range");
  }
  const Index skip = include_initial ? 0 : 1;
  Index cols = 0;
  for (const auto& t : trajectories) {
    if (t.states.rows() != full) throw DimensionError("trajectories have different state sizes");
    cols += std::max<Index>(0, t.states.cols() - skip);
  }
  SnapshotMatrix out;
  out.data.resize(size, cols);
  out.provenance.reserve(static_cast<std::size_t>(cols));
  Index c = 0;
  for (const auto& t : trajectories) {
    for (Index m = skip; m < t.states.cols(); ++m) {
      out.data.col(c++) = t.states.col(m).segment(offset, size);
      out.provenance.emplace_back(t.mu, m);
    }
  }
  return out;
}

namespace {

void fix_signs(Matrix& modes) {
  for (Index k = 0; k < modes.cols(); ++k) {
    Index arg = 0;
    modes.col(k).cwiseAbs().maxCoeff(&arg);
    if (modes(arg, k) < 0.0) modes.col(k) *= -1.0;
  }
}

}  // namespace

ReducedBasis pod(const SnapshotMatrix& snapshots) {
  const Matrix& x = snapshots.data;
  if (x.cols() < 1 || x.rows() < 1) throw std::invalid_argument("empty snapshot matrix");
  if (x.squaredNorm() == 0.0) throw std::invalid_argument("all-zero snapshot matrix");

  const bool state_side = x.rows() <= x.cols();
  const Index g = state_side ? x.rows() : x.cols();
  Matrix gram = Matrix::Zero(g, g);
  if (state_side) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram.selfadjointView<Eigen::Lower>());
  if (eig.info() != Eigen::Success) throw std::runtime_error("POD eigensolver failed");

  // Eigenvalues come ascending.
  const Vector lambda = eig.eigenvalues().reverse();
  const double top = lambda(0);
  Index keep = 0;
  while (keep < g && lambda(keep) > 1e-14 * top) ++keep;

  ReducedBasis basis;
  basis.singular_values = lambda.head(keep).cwiseSqrt();
  const Matrix vecs = eig.eigenvectors().rowwise().reverse().leftCols(keep);
  if (state_side) {
    basis.phi = vecs;
  } else {
    Matrix u = x * vecs;
    for (Index k = 0; k < keep; ++k) u.col(k) /= basis.singular_values(k);
    // Orthonormalize again; X V / sigma loses orthogonality for small sigma.
    Eigen::HouseholderQR<Matrix> qr(u);
    Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), keep);
    const Matrix r = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
    for (Index k = 0; k < keep; ++k)
      if (r(k, k) < 0.0) q.col(k) *= -1.0;
    basis.phi = std::move(q);
  }
  fix_signs(basis.phi);
  return basis;
}

Index modes_for_energy(const Vector& sigma, double eps_pod) {
  if (!(eps_pod > 0.0) || eps_pod > 1.0) throw std::invalid_argument("eps_pod must lie in (0, 1]");
  const double total = sigma.squaredNorm();
  double cum = 0.0;
  for (Index k = 0; k < sigma.size(); ++k) {
    cum += sigma(k) * sigma(k);
    if (1.0 - cum / total < eps_pod) return k + 1;
  }
  return sigma.size();
}

ReducedBasis select_modes(const ReducedBasis& basis, double eps_pod) {
  const Index n = modes_for_energy(basis.singular_values, eps_pod);
  ReducedBasis out = basis;
  out.phi = basis.phi.leftCols(n);
  out.n = n;
  out.eps_pod = eps_pod;
  out.block_modes = {n};
  out.block_singular_values = {basis.singular_values};
  return out;
}

ReducedBasis block_diagonal(const std::vector<ReducedBasis>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("no blocks for block-diagonal basis");
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.phi.rows();
    cols += b.phi.cols();
  }
  ReducedBasis out;
  out.phi = Matrix::Zero(rows, cols);
  LiftedSystemLayout layout;
  Index r = 0, c = 0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    out.phi.block(r, c, b.phi.rows(), b.phi.cols()) = b.phi;
    r += b.phi.rows();
    c += b.phi.cols();
    layout.block_sizes.push_back(b.phi.rows());
    layout.variable_names.push_back("x" + std::to_string(k + 1));
    out.block_modes.push_back(b.phi.cols());
    out.block_singular_values.push_back(b.singular_values);
  }
  out.n = cols;
  out.singular_values = blocks.front().singular_values;
  out.eps_pod = blocks.front().eps_pod;
  out.layout = std::move(layout);
  return out;
}

ReducedBasis build_block_basis(const std::vector<SnapshotMatrix>& per_variable, double eps_pod) {
  std::vector<ReducedBasis> blocks;
  blocks.reserve(per_variable.size());
  for (const auto& s : per_variable) blocks.push_back(select_modes(pod(s), eps_pod));
  return block_diagonal(blocks);
}

}  // namespace polyrom
