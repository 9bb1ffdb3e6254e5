#include "polyrom/kernel.hpp"

#include <algorithm>

namespace polyrom {

PolynomialKernel::PolynomialKernel(const PolynomialSystem& sys, const ParamVector& mu)
    : rows_(sys.dim_state), state_dim_(sys.dim_state), input_dim_(sys.dim_input) {
  const Index n = sys.dim_state;
  if (mu.size() != sys.num_params) {
    throw DimensionError("parameter vector has " + std::to_string(mu.size()) +
                         " components, system expects " + std::to_string(sys.num_params));
  }

  constant_ = Vector::Zero(n);
  {
    const SparseMatrix c = evaluate_operator(sys.op_C, mu);
    for (Index r = 0; r < c.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(c, r); it; ++it) constant_(r) += it.value();
  }

  auto collect = [&](char kind, const AffineOperator& op) {
    if (!op.is_zero()) add_operator(kind, evaluate_operator(op, mu), 1.0);
  };
  collect('A', sys.op_A);
  collect('F', sys.op_F);
  collect('B', sys.op_B);
  collect('N', sys.op_N);
  if (sys.op_W) collect('W', *sys.op_W);
}

void PolynomialKernel::add_operator(char kind, const SparseMatrix& m, double scale) {
  const Index n = state_dim_;
  for (Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      const Index c = it.col();
      const double v = scale * it.value();
      switch (kind) {
        case 'C': constant_(r) += v; break;
        case 'A': linear_.push_back({r, c, v}); break;
        case 'F': quadratic_.push_back({r, c / n, c % n, v}); break;
        case 'B': input_linear_.push_back({r, c, v}); break;
        case 'N': bilinear_.push_back({r, c / n, c % n, v}); break;
        case 'W': cubic_.push_back({r, c / (n * n), (c / n) % n, c % n, v}); break;
        default: throw std::invalid_argument("unknown operator kind");
      }
    }
  }
}

PolynomialKernel PolynomialKernel::from_operator(const PolynomialSystem& sys, char kind,
                                                 const SparseMatrix& m) {
  PolynomialKernel k;
  k.rows_ = sys.dim_state;
  k.state_dim_ = sys.dim_state;
  k.input_dim_ = sys.dim_input;
  k.constant_ = Vector::Zero(sys.dim_state);
  k.add_operator(kind, m, 1.0);
  return k;
}

void PolynomialKernel::scale(double s) {
  constant_ *= s;
  for (auto& e : linear_) e.value *= s;
  for (auto& e : quadratic_) e.value *= s;
  for (auto& e : input_linear_) e.value *= s;
  for (auto& e : bilinear_) e.value *= s;
  for (auto& e : cubic_) e.value *= s;
}

void PolynomialKernel::accumulate(const PolynomialKernel& other, double scale) {
  if (other.rows_ != rows_ || other.state_dim_ != state_dim_ || other.input_dim_ != input_dim_) {
    throw DimensionError("accumulate: kernel shapes differ");
  }
  if (scale == 0.0) return;
  constant_ += scale * other.constant_;
  auto append = [scale](auto& dst, const auto& src) {
    for (auto e : src) {
      e.value *= scale;
      dst.push_back(e);
    }
  };
  append(linear_, other.linear_);
  append(quadratic_, other.quadratic_);
  append(input_linear_, other.input_linear_);
  append(bilinear_, other.bilinear_);
  append(cubic_, other.cubic_);
}

std::vector<KernelTerm> kernel_terms(const PolynomialSystem& sys) {
  std::vector<KernelTerm> out;
  auto add = [&](char kind, const AffineOperator& op) {
    for (const auto& t : op.terms())
      out.push_back({t.coefficient, PolynomialKernel::from_operator(sys, kind, t.matrix)});
  };
  add('C', sys.op_C);
  add('A', sys.op_A);
  add('F', sys.op_F);
  add('B', sys.op_B);
  add('N', sys.op_N);
  if (sys.op_W) add('W', *sys.op_W);
  return out;
}

PolynomialKernel combine_kernel_terms(const std::vector<KernelTerm>& terms, const ParamVector& mu) {
  if (terms.empty()) throw std::invalid_argument("no kernel terms to combine");
  PolynomialKernel out = terms.front().kernel;
  out.scale(terms.front().theta(mu));
  for (std::size_t t = 1; t < terms.size(); ++t) out.accumulate(terms[t].kernel, terms[t].theta(mu));
  return out;
}

Vector PolynomialKernel::rhs(const Vector& x, const Vector& u) const {
  Vector out(rows_);
  rhs_into(x, u, out);
  return out;
}

void PolynomialKernel::rhs_into(const Vector& x, const Vector& u, Vector& out) const {
  if (x.size() != state_dim_ || u.size() != input_dim_) {
    throw DimensionError("kernel rhs: state or input length mismatch");
  }
  out = constant_;
  for (const auto& e : linear_) out(e.row) += e.value * x(e.col);
  for (const auto& e : quadratic_) out(e.row) += e.value * x(e.i) * x(e.j);
  for (const auto& e : input_linear_) out(e.row) += e.value * u(e.col);
  for (const auto& e : bilinear_) out(e.row) += e.value * u(e.input) * x(e.col);
  for (const auto& e : cubic_) out(e.row) += e.value * x(e.i) * x(e.j) * x(e.k);
}

Matrix PolynomialKernel::jacobian_times(const Vector& x, const Vector& u,
                                        const Matrix& basis) const {
  if (x.size() != state_dim_ || u.size() != input_dim_ || basis.rows() != state_dim_) {
    throw DimensionError("kernel jacobian_times: dimension mismatch");
  }
  // Row-major accumulation: each entry adds a scaled basis row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(rows_,
                                                                                 basis.cols());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi = basis;
  for (const auto& e : linear_) out.row(e.row) += e.value * phi.row(e.col);
  for (const auto& e : quadratic_) {
    out.row(e.row) += (e.value * x(e.j)) * phi.row(e.i);
    out.row(e.row) += (e.value * x(e.i)) * phi.row(e.j);
  }
  for (const auto& e : bilinear_) out.row(e.row) += (e.value * u(e.input)) * phi.row(e.col);
  for (const auto& e : cubic_) {
    out.row(e.row) += (e.value * x(e.j) * x(e.k)) * phi.row(e.i);
    out.row(e.row) += (e.value * x(e.i) * x(e.k)) * phi.row(e.j);
    out.row(e.row) += (e.value * x(e.i) * x(e.j)) * phi.row(e.k);
  }
  return out;
}

Eigen::SparseMatrix<double> PolynomialKernel::jacobian(const Vector& x, const Vector& u) const {
  if (x.size() != state_dim_ || u.size() != input_dim_) {
    throw DimensionError("kernel jacobian: state or input length mismatch");
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(linear_.size() + 2 * quadratic_.size() + bilinear_.size() + 3 * cubic_.size());
  for (const auto& e : linear_) t.emplace_back(e.row, e.col, e.value);
  for (const auto& e : quadratic_) {
    t.emplace_back(e.row, e.i, e.value * x(e.j));
    t.emplace_back(e.row, e.j, e.value * x(e.i));
  }
  for (const auto& e : bilinear_) t.emplace_back(e.row, e.col, e.value * u(e.input));
  for (const auto& e : cubic_) {
    t.emplace_back(e.row, e.i, e.value * x(e.j) * x(e.k));
    t.emplace_back(e.row, e.j, e.value * x(e.i) * x(e.k));
    t.emplace_back(e.row, e.k, e.value * x(e.i) * x(e.j));
  }
  Eigen::SparseMatrix<double> jac(rows_, state_dim_);
  jac.setFromTriplets(t.begin(), t.end());
  return jac;
}

PolynomialKernel PolynomialKernel::restrict_rows(std::span<const Index> rows,
                                                 std::span<const Index> columns) const {
  std::vector<Index> row_map(static_cast<std::size_t>(rows_), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= rows_) throw DimensionError("restrict_rows: row out of range");
    row_map[rows[k]] = static_cast<Index>(k);
  }
  std::vector<Index> col_map(static_cast<std::size_t>(state_dim_), -1);
  for (std::size_t k = 0; k < columns.size(); ++k) col_map[columns[k]] = static_cast<Index>(k);
  auto local_col = [&](Index c) {
    const Index lc = col_map[c];
    if (lc < 0) throw DimensionError("restrict_rows: column set misses a dependency");
    return lc;
  };

  PolynomialKernel out;
  out.rows_ = static_cast<Index>(rows.size());
  out.state_dim_ = static_cast<Index>(columns.size());
  out.input_dim_ = input_dim_;
  out.constant_.resize(out.rows_);
  for (std::size_t k = 0; k < rows.size(); ++k) out.constant_(k) = constant_(rows[k]);
  for (const auto& e : linear_)
    if (row_map[e.row] >= 0) out.linear_.push_back({row_map[e.row], local_col(e.col), e.value});
  for (const auto& e : quadratic_)
    if (row_map[e.row] >= 0)
      out.quadratic_.push_back({row_map[e.row], local_col(e.i), local_col(e.j), e.value});
  for (const auto& e : input_linear_)
    if (row_map[e.row] >= 0) out.input_linear_.push_back({row_map[e.row], e.col, e.value});
  for (const auto& e : bilinear_)
    if (row_map[e.row] >= 0)
      out.bilinear_.push_back({row_map[e.row], e.input, local_col(e.col), e.value});
  for (const auto& e : cubic_)
    if (row_map[e.row] >= 0)
      out.cubic_.push_back(
          {row_map[e.row], local_col(e.i), local_col(e.j), local_col(e.k), e.value});
  return out;
}

JacobianWorkspace::JacobianWorkspace(const PolynomialKernel& kernel) : kernel_(&kernel) {
  if (kernel.rows() != kernel.state_dim()) {
    throw DimensionError("JacobianWorkspace requires a square kernel");
  }
  const Index n = kernel.rows();
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i) t.emplace_back(i, i, 0.0);
  for (const auto& e : kernel.linear_) t.emplace_back(e.row, e.col, 0.0);
  for (const auto& e : kernel.quadratic_) {
    t.emplace_back(e.row, e.i, 0.0);
    t.emplace_back(e.row, e.j, 0.0);
  }
  for (const auto& e : kernel.bilinear_) t.emplace_back(e.row, e.col, 0.0);
  for (const auto& e : kernel.cubic_) {
    t.emplace_back(e.row, e.i, 0.0);
    t.emplace_back(e.row, e.j, 0.0);
    t.emplace_back(e.row, e.k, 0.0);
  }
  jac_.resize(n, n);
  jac_.setFromTriplets(t.begin(), t.end());
  jac_.makeCompressed();

  auto slot = [&](Index r, Index c) -> Index {
    const auto* outer = jac_.outerIndexPtr();
    const auto* inner = jac_.innerIndexPtr();
    const auto* begin = inner + outer[c];
    const auto* end = inner + outer[c + 1];
    const auto* it = std::lower_bound(begin, end, static_cast<int>(r));
    return static_cast<Index>(it - inner);
  };
  for (Index i = 0; i < n; ++i) diag_slot_.push_back(slot(i, i));
  for (const auto& e : kernel.linear_) linear_slot_.push_back(slot(e.row, e.col));
  for (const auto& e : kernel.quadratic_) {
    quad_slot_i_.push_back(slot(e.row, e.i));
    quad_slot_j_.push_back(slot(e.row, e.j));
  }
  for (const auto& e : kernel.bilinear_) bilinear_slot_.push_back(slot(e.row, e.col));
  for (const auto& e : kernel.cubic_) {
    cubic_slot_i_.push_back(slot(e.row, e.i));
    cubic_slot_j_.push_back(slot(e.row, e.j));
    cubic_slot_k_.push_back(slot(e.row, e.k));
  }
}

const Eigen::SparseMatrix<double>& JacobianWorkspace::assemble(const Vector& x, const Vector& u,
                                                               double diag, double scale) {
  const auto& k = *kernel_;
  double* v = jac_.valuePtr();
  std::fill(v, v + jac_.nonZeros(), 0.0);
  for (std::size_t i = 0; i < diag_slot_.size(); ++i) v[diag_slot_[i]] += diag;
  for (std::size_t q = 0; q < k.linear_.size(); ++q)
    v[linear_slot_[q]] += scale * k.linear_[q].value;
  for (std::size_t q = 0; q < k.quadratic_.size(); ++q) {
    const auto& e = k.quadratic_[q];
    v[quad_slot_i_[q]] += scale * e.value * x(e.j);
    v[quad_slot_j_[q]] += scale * e.value * x(e.i);
  }
  for (std::size_t q = 0; q < k.bilinear_.size(); ++q) {
    const auto& e = k.bilinear_[q];
    v[bilinear_slot_[q]] += scale * e.value * u(e.input);
  }
  for (std::size_t q = 0; q < k.cubic_.size(); ++q) {
    const auto& e = k.cubic_[q];
    v[cubic_slot_i_[q]] += scale * e.value * x(e.j) * x(e.k);
    v[cubic_slot_j_[q]] += scale * e.value * x(e.i) * x(e.k);
    v[cubic_slot_k_[q]] += scale * e.value * x(e.i) * x(e.j);
  }
  return jac_;
}

}  // namespace polyrom
