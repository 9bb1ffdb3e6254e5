#include "polyrom/hrf.hpp"

#include <cmath>
#include <sstream>

namespace polyrom {

Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> HrfGalerkinOperators::F_G(const Matrix& F, Index ell) {
  const Index n = F.rows();
  if (ell < 1 || ell > n) throw std::out_of_range("F_G index out of range");
  return F.middleCols((ell - 1) * n, n);
}

StridedView HrfGalerkinOperators::F_H(const Matrix& F, Index ell) {
  const Index n = F.rows();
  if (ell < 1 || ell > n) throw std::out_of_range("F_H index out of range");
  // Columns ell-1, ell-1+n, ...: consecutive view columns are n storage columns apart.
  return StridedView(F.data() + (ell - 1) * n, n, n, Eigen::OuterStride<>(n * n));
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_basis(const SparseMatrix& op, const Matrix& phi) {
  if (op.rows() != phi.rows()) throw DimensionError("operator rows do not match the basis");
}

}  // namespace

Matrix quadratic_image(const SparseMatrix& op, const Matrix& phi) {
  check_basis(op, phi);
  const Index big = phi.rows();
  const Index n = phi.cols();
  if (op.cols() != big * big) throw DimensionError("quadratic operator needs N^2 columns");
  const RowMatrix p = phi;
  RowMatrix out = RowMatrix::Zero(big, n * n);
  for (Index r = 0; r < op.outerSize(); ++r) {
    double* row = out.row(r).data();
    for (SparseMatrix::InnerIterator it(op, r); it; ++it) {
      const Index i = it.col() / big;
      const Index j = it.col() % big;
      const double* pi = p.row(i).data();
      const double* pj = p.row(j).data();
      for (Index a = 0; a < n; ++a) {
        const double c = it.value() * pi[a];
        double* dst = row + a * n;
        for (Index b = 0; b < n; ++b) dst[b] += c * pj[b];
      }
    }
  }
  return out;
}

Matrix cubic_image(const SparseMatrix& op, const Matrix& phi) {
  check_basis(op, phi);
  const Index big = phi.rows();
  const Index n = phi.cols();
  if (op.cols() != big * big * big) throw DimensionError("cubic operator needs N^3 columns");
  const RowMatrix p = phi;
  RowMatrix out = RowMatrix::Zero(big, n * n * n);
  for (Index r = 0; r < op.outerSize(); ++r) {
    double* row = out.row(r).data();
    for (SparseMatrix::InnerIterator it(op, r); it; ++it) {
      const Index i = it.col() / (big * big);
      const Index j = (it.col() / big) % big;
      const Index k = it.col() % big;
      const double* pi = p.row(i).data();
      const double* pj = p.row(j).data();
      const double* pk = p.row(k).data();
      for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
          const double c = it.value() * pi[a] * pj[b];
          double* dst = row + (a * n + b) * n;
          for (Index e = 0; e < n; ++e) dst[e] += c * pk[e];
        }
      }
    }
  }
  return out;
}

Matrix bilinear_image(const SparseMatrix& op, const Matrix& phi, Index n_inputs) {
  check_basis(op, phi);
  const Index big = phi.rows();
  const Index n = phi.cols();
  if (op.cols() != n_inputs * big) throw DimensionError("bilinear operator needs N_u N columns");
  Matrix out = Matrix::Zero(big, n_inputs * n);
  for (Index r = 0; r < op.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(op, r); it; ++it) {
      const Index k = it.col() / big;
      const Index j = it.col() % big;
      out.block(r, k * n, 1, n) += it.value() * phi.row(j);
    }
  }
  return out;
}

Matrix contract_quadratic(const SparseMatrix& op, const Matrix& phi) {
  return phi.transpose() * quadratic_image(op, phi);
}

HrfGalerkinOperators precompute_hrf_galerkin(const PolynomialSystem& sys, const ReducedBasis& basis,
                                             double cubic_cap) {
  const Matrix& phi = basis.phi;
  if (phi.rows() != sys.dim_state) throw DimensionError("basis rows do not match the system");
  HrfGalerkinOperators ops;
  ops.n = phi.cols();
  ops.n_inputs = sys.dim_input;
  ops.PtP = phi.transpose() * phi;
  for (const auto& t : sys.op_C.terms())
    ops.PtC.push_back({t.coefficient, phi.transpose() * (t.matrix * Vector::Ones(1))});
  for (const auto& t : sys.op_A.terms())
    ops.PtAP.push_back({t.coefficient, phi.transpose() * (t.matrix * phi)});
  for (const auto& t : sys.op_F.terms())
    ops.PtF.push_back({t.coefficient, contract_quadratic(t.matrix, phi)});
  if (sys.dim_input > 0) {
    for (const auto& t : sys.op_B.terms())
      ops.PtB.push_back({t.coefficient, phi.transpose() * Matrix(t.matrix)});
    for (const auto& t : sys.op_N.terms())
      ops.PtN.push_back(
          {t.coefficient, phi.transpose() * bilinear_image(t.matrix, phi, sys.dim_input)});
  }
  if (sys.is_cubic()) precompute_hrf_cubic(ops, sys, basis, cubic_cap);
  return ops;
}

void precompute_hrf_cubic(HrfGalerkinOperators& ops, const PolynomialSystem& sys,
                          const ReducedBasis& basis, double cap) {
  if (!sys.op_W) throw std::invalid_argument("system has no cubic operator");
  const double n = static_cast<double>(basis.phi.cols());
  const double entries = n * n * n * n * static_cast<double>(sys.op_W->num_terms());
  if (entries > cap) {
    std::ostringstream os;
    os << "cubic reduced operator needs " << entries << " entries, cap is " << cap;
    throw std::runtime_error(os.str());
  }
  ops.PtW.clear();
  for (const auto& t : sys.op_W->terms())
    ops.PtW.push_back({t.coefficient, basis.phi.transpose() * cubic_image(t.matrix, basis.phi)});
}

HrfGalerkinAssembler::HrfGalerkinAssembler(HrfGalerkinOperators ops) : ops_(std::move(ops)) {}

namespace {

template <class T>
T collapse(const std::vector<ReducedTerm<T>>& terms, const ParamVector& mu, Index rows,
           Index cols) {
  T out = T::Zero(rows, cols);
  for (const auto& t : terms) out += t.theta(mu) * t.tensor;
  return out;
}

// Averages F over the two orderings of each quadratic column pair; F (x (x) x) is unchanged.
Matrix symmetrize_quadratic(const Matrix& f, Index n) {
  Matrix out(f.rows(), f.cols());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) out.col(i * n + j) = 0.5 * (f.col(i * n + j) + f.col(j * n + i));
  return out;
}

// Same for the six orderings of each cubic column triple.
Matrix symmetrize_cubic(const Matrix& w, Index n) {
  Matrix out(w.rows(), w.cols());
  auto col = [n](Index i, Index j, Index k) { return (i * n + j) * n + k; };
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        out.col(col(i, j, k)) = (w.col(col(i, j, k)) + w.col(col(i, k, j)) + w.col(col(j, i, k)) +
                                 w.col(col(j, k, i)) + w.col(col(k, i, j)) + w.col(col(k, j, i))) /
                                6.0;
  return out;
}

void kron_into(const Vector& a, const Vector& b, Vector& out) {
  out.resize(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
}

}  // namespace

void HrfGalerkinAssembler::prepare(const ParamVector& mu) {
  const Index n = ops_.n;
  const Index nu = ops_.n_inputs;
  c_ = Vector::Zero(n);
  for (const auto& t : ops_.PtC) c_ += t.theta(mu) * t.tensor;
  a_ = collapse(ops_.PtAP, mu, n, n);
  f_ = symmetrize_quadratic(collapse(ops_.PtF, mu, n, n * n), n);
  b_ = collapse(ops_.PtB, mu, n, nu);
  n_ = collapse(ops_.PtN, mu, n, nu * n);
  has_c_ = !ops_.PtC.empty() || !ops_.PtB.empty();
  has_f_ = !ops_.PtF.empty();
  has_n_ = !ops_.PtN.empty();
  has_w_ = !ops_.PtW.empty();
  if (has_w_) w_ = symmetrize_cubic(collapse(ops_.PtW, mu, n, n * n * n), n);
  prepared_ = true;
}

void HrfGalerkinAssembler::reduced_rhs(const Vector& xhat, const Vector& u, Vector& out) {
  const Index n = ops_.n;
  out = c_ + a_ * xhat;
  if (ops_.n_inputs > 0) {
    out.noalias() += b_ * u;
    if (has_n_)
      for (Index k = 0; k < ops_.n_inputs; ++k) out.noalias() += u(k) * (n_.middleCols(k * n, n) * xhat);
  }
  if (has_f_) {
    kron_into(xhat, xhat, kk_);
    out.noalias() += f_ * kk_;
  }
  if (has_w_) {
    kron_into(xhat, xhat, kk_);
    kron_into(kk_, xhat, kkk_);
    out.noalias() += w_ * kkk_;
  }
}

void HrfGalerkinAssembler::begin_step(const MultistepScheme& scheme,
                                      std::span<const Vector> history,
                                      std::span<const Vector> inputs) {
  if (!prepared_) throw std::logic_error("assembler used before prepare()");
  const Index n = ops_.n;
  history_part_ = Vector::Zero(n);
  for (std::size_t j = 1; j < inputs.size(); ++j) {
    history_part_.noalias() += scheme.alphas[j] * (ops_.PtP * history[j - 1]);
    if (scheme.betas[j] != 0.0) {
      reduced_rhs(history[j - 1], inputs[j], fr_);
      history_part_ -= scheme.dt * scheme.betas[j] * fr_;
    }
  }
  const Vector& u = inputs[0];
  const_ = c_;
  lin_ = a_;
  if (ops_.n_inputs > 0) {
    const_.noalias() += b_ * u;
    if (has_n_)
      for (Index k = 0; k < ops_.n_inputs; ++k) lin_ += u(k) * n_.middleCols(k * n, n);
  }
  alpha0_ = scheme.alphas[0];
  scale_ = -scheme.dt * scheme.betas[0];
}

void HrfGalerkinAssembler::assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) {
  const Index n = ops_.n;
  if (xhat.size() != n) throw DimensionError("hrf-g iterate has wrong length");
  fr_ = const_;
  fr_.noalias() += lin_ * xhat;
  jac_ = lin_;
  // With symmetric tensors, F (x (x) I) = F (I (x) x) and the Jacobian of
  // F (x (x) x) is twice the former; the same holds with three for W.
  if (has_f_) {
    kk_.noalias() = Eigen::Map<const Matrix>(f_.data(), n * n, n) * xhat;
    const Eigen::Map<const Matrix> fx(kk_.data(), n, n);
    fr_.noalias() += fx * xhat;
    jac_ += 2.0 * fx;
  }
  if (has_w_) {
    kron_into(xhat, xhat, kkk_);
    kk_.noalias() = Eigen::Map<const Matrix>(w_.data(), n * n, n * n) * kkk_;
    const Eigen::Map<const Matrix> wxx(kk_.data(), n, n);
    fr_.noalias() += wxx * xhat;
    jac_ += 3.0 * wxx;
  }
  lhs = alpha0_ * ops_.PtP;
  lhs.noalias() += scale_ * jac_;
  rhs = history_part_;
  rhs.noalias() += alpha0_ * (ops_.PtP * xhat);
  rhs += scale_ * fr_;
}

// ---------------------------------------------------------------------------------
// LSPG

const DictGroup& HrfLspgOperators::group(DictKind kind, std::size_t term) const {
  std::size_t seen = 0;
  for (const auto& g : groups) {
    if (g.kind != kind) continue;
    if (seen++ == term) return g;
  }
  throw std::out_of_range("no dictionary group of the requested kind");
}

Eigen::Block<const Matrix> HrfLspgOperators::block(DictKind row, DictKind col,
                                                   std::size_t row_term,
                                                   std::size_t col_term) const {
  const auto& r = group(row, row_term);
  const auto& c = group(col, col_term);
  return K.block(r.offset, c.offset, r.size, c.size);
}

HrfLspgOperators precompute_hrf_lspg(const PolynomialSystem& sys, const ReducedBasis& basis,
                                     double cap) {
  const Matrix& phi = basis.phi;
  if (phi.rows() != sys.dim_state) throw DimensionError("basis rows do not match the system");
  const Index n = phi.cols();
  const Index nu = sys.dim_input;
  HrfLspgOperators ops;
  ops.n = n;
  ops.n_inputs = nu;

  Index d = 0;
  auto add = [&](DictKind kind, AffineScalar theta, Index size) {
    ops.groups.push_back({kind, theta, d, size});
    d += size;
  };
  add(DictKind::P, AffineScalar::constant(1.0), n);
  for (const auto& t : sys.op_C.terms()) add(DictKind::C, t.coefficient, 1);
  for (const auto& t : sys.op_A.terms()) add(DictKind::A, t.coefficient, n);
  for (const auto& t : sys.op_F.terms()) add(DictKind::F, t.coefficient, n * n);
  if (nu > 0) {
    for (const auto& t : sys.op_B.terms()) add(DictKind::B, t.coefficient, nu);
    for (const auto& t : sys.op_N.terms()) add(DictKind::N, t.coefficient, nu * n);
  }
  if (sys.is_cubic())
    for (const auto& t : sys.op_W->terms()) add(DictKind::W, t.coefficient, n * n * n);

  const double entries = static_cast<double>(d) * static_cast<double>(d);
  if (entries > cap) {
    std::ostringstream os;
    os << "HRF-LSPG Gram tensor needs " << entries << " entries (n = " << n
       << ", order n^4 for quadratic and n^6 for cubic terms), cap is " << cap;
    throw MemoryCapExceeded(os.str());
  }

  Matrix dict(sys.dim_state, d);
  std::size_t ci = 0, ai = 0, fi = 0, bi = 0, ni = 0, wi = 0;
  for (const auto& g : ops.groups) {
    auto cols = dict.middleCols(g.offset, g.size);
    switch (g.kind) {
      case DictKind::P: cols = phi; break;
      case DictKind::C: cols = Matrix(sys.op_C.terms()[ci++].matrix); break;
      case DictKind::A: cols = sys.op_A.terms()[ai++].matrix * phi; break;
      case DictKind::F: cols = quadratic_image(sys.op_F.terms()[fi++].matrix, phi); break;
      case DictKind::B: cols = Matrix(sys.op_B.terms()[bi++].matrix); break;
      case DictKind::N: cols = bilinear_image(sys.op_N.terms()[ni++].matrix, phi, nu); break;
      case DictKind::W: cols = cubic_image(sys.op_W->terms()[wi++].matrix, phi); break;
    }
  }
  ops.K = Matrix::Zero(d, d);
  ops.K.selfadjointView<Eigen::Lower>().rankUpdate(dict.transpose());
  ops.K.triangularView<Eigen::StrictlyUpper>() = ops.K.transpose();
  return ops;
}

HrfLspgAssembler::HrfLspgAssembler(HrfLspgOperators ops) : ops_(std::move(ops)) {}

void HrfLspgAssembler::prepare(const ParamVector& mu) {
  const Index n = ops_.n;
  const Index nu = ops_.n_inputs;
  auto present = [&](DictKind k) {
    for (const auto& g : ops_.groups)
      if (g.kind == k) return true;
    return false;
  };
  d_ = 0;
  auto place = [&](DictKind k, Index size) -> Index {
    if (!present(k)) return -1;
    const Index off = d_;
    d_ += size;
    return off;
  };
  place(DictKind::P, n);
  oc_ = place(DictKind::C, 1);
  oa_ = place(DictKind::A, n);
  of_ = place(DictKind::F, n * n);
  ob_ = place(DictKind::B, nu);
  on_ = place(DictKind::N, nu * n);
  ow_ = place(DictKind::W, n * n * n);
  auto target = [&](DictKind k) -> Index {
    switch (k) {
      case DictKind::P: return 0;
      case DictKind::C: return oc_;
      case DictKind::A: return oa_;
      case DictKind::F: return of_;
      case DictKind::B: return ob_;
      case DictKind::N: return on_;
      case DictKind::W: return ow_;
    }
    return -1;
  };
  // K(mu) = Theta^T K Theta with Theta merging equal-kind groups by theta(mu).
  k_ = Matrix::Zero(d_, d_);
  for (const auto& gr : ops_.groups) {
    const double tr = gr.theta(mu);
    const Index r = target(gr.kind);
    for (const auto& gc : ops_.groups) {
      const double tc = gc.theta(mu);
      const Index c = target(gc.kind);
      k_.block(r, c, gr.size, gc.size) +=
          (tr * tc) * ops_.K.block(gr.offset, gc.offset, gr.size, gc.size);
    }
  }
  prepared_ = true;
}

namespace {

// Adds weight * (coefficient vector of one state's contributions) to rcoef.
void add_state_terms(Vector& rcoef, const Vector& x, const Vector& u, double w_lin,
                     Index oa, Index of, Index on, Index ow, Index n, Index nu) {
  if (oa >= 0) rcoef.segment(oa, n) += w_lin * x;
  if (of >= 0)
    for (Index i = 0; i < n; ++i) rcoef.segment(of + i * n, n) += (w_lin * x(i)) * x;
  if (on >= 0)
    for (Index k = 0; k < nu; ++k) rcoef.segment(on + k * n, n) += (w_lin * u(k)) * x;
  if (ow >= 0)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) rcoef.segment(ow + (i * n + j) * n, n) += (w_lin * x(i) * x(j)) * x;
}

}  // namespace

void HrfLspgAssembler::begin_step(const MultistepScheme& scheme, std::span<const Vector> history,
                                  std::span<const Vector> inputs) {
  if (!prepared_) throw std::logic_error("assembler used before prepare()");
  const Index n = ops_.n;
  const Index nu = ops_.n_inputs;
  rcoef_hist_ = Vector::Zero(d_);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const double beta = -scheme.dt * scheme.betas[j];
    if (oc_ >= 0) rcoef_hist_(oc_) += beta;
    if (ob_ >= 0) rcoef_hist_.segment(ob_, nu) += beta * inputs[j];
    if (j == 0) continue;
    rcoef_hist_.head(n) += scheme.alphas[j] * history[j - 1];
    if (beta != 0.0)
      add_state_terms(rcoef_hist_, history[j - 1], inputs[j], beta, oa_, of_, on_, ow_, n, nu);
  }
  u_ = inputs[0];
  alpha0_ = scheme.alphas[0];
  scale_ = -scheme.dt * scheme.betas[0];
}

void HrfLspgAssembler::assemble(const Vector& xhat, Matrix& lhs, Vector& rhs) {
  const Index n = ops_.n;
  const Index nu = ops_.n_inputs;
  if (xhat.size() != n) throw DimensionError("hrf-lspg iterate has wrong length");
  const double s = scale_;

  rcoef_ = rcoef_hist_;
  rcoef_.head(n) += alpha0_ * xhat;
  add_state_terms(rcoef_, xhat, u_, s, oa_, of_, on_, ow_, n, nu);

  // KJ = K(mu) Jcoef, using the sparsity of Jcoef.
  kj_.resize(d_, n);
  for (Index c = 0; c < n; ++c) {
    auto col = kj_.col(c);
    col = alpha0_ * k_.col(c);
    if (s == 0.0) continue;
    if (oa_ >= 0) col += s * k_.col(oa_ + c);
    if (of_ >= 0)
      for (Index i = 0; i < n; ++i)
        col += (s * xhat(i)) * (k_.col(of_ + i * n + c) + k_.col(of_ + c * n + i));
    if (on_ >= 0)
      for (Index k = 0; k < nu; ++k) col += (s * u_(k)) * k_.col(on_ + k * n + c);
    if (ow_ >= 0)
      for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b)
          col += (s * xhat(a) * xhat(b)) *
                 (k_.col(ow_ + (c * n + a) * n + b) + k_.col(ow_ + (a * n + c) * n + b) +
                  k_.col(ow_ + (a * n + b) * n + c));
  }
  rhs.noalias() = kj_.transpose() * rcoef_;

  lhs.resize(n, n);
  for (Index r = 0; r < n; ++r) {
    Eigen::RowVectorXd row = alpha0_ * kj_.row(r);
    if (s != 0.0) {
      if (oa_ >= 0) row += s * kj_.row(oa_ + r);
      if (of_ >= 0)
        for (Index i = 0; i < n; ++i)
          row += (s * xhat(i)) * (kj_.row(of_ + i * n + r) + kj_.row(of_ + r * n + i));
      if (on_ >= 0)
        for (Index k = 0; k < nu; ++k) row += (s * u_(k)) * kj_.row(on_ + k * n + r);
      if (ow_ >= 0)
        for (Index a = 0; a < n; ++a)
          for (Index b = 0; b < n; ++b)
            row += (s * xhat(a) * xhat(b)) *
                   (kj_.row(ow_ + (r * n + a) * n + b) + kj_.row(ow_ + (a * n + r) * n + b) +
                    kj_.row(ow_ + (a * n + b) * n + r));
    }
    lhs.row(r) = row;
  }
  lhs = 0.5 * (lhs + lhs.transpose()).eval();
}

void assemble_hrf_galerkin(const HrfGalerkinOperators& ops, const MultistepScheme& scheme,
                           const Vector& xhat, std::span<const Vector> history,
                           std::span<const Vector> inputs, const ParamVector& mu, Matrix& lhs,
                           Vector& rhs) {
  HrfGalerkinAssembler a(ops);
  a.prepare(mu);
  a.begin_step(scheme, history, inputs);
  a.assemble(xhat, lhs, rhs);
}

void assemble_hrf_lspg(const HrfLspgOperators& ops, const MultistepScheme& scheme,
                       const Vector& xhat, std::span<const Vector> history,
                       std::span<const Vector> inputs, const ParamVector& mu, Matrix& lhs,
                       Vector& rhs) {
  HrfLspgAssembler a(ops);
  a.prepare(mu);
  a.begin_step(scheme, history, inputs);
  a.assemble(xhat, lhs, rhs);
}

}  // namespace polyrom
