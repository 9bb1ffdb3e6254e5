#include "polyrom/nnls.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polyrom {

namespace {

// Q R factorization of the active columns, updated one column at a time.
class ActiveQr {
 public:
  ActiveQr(const Matrix& a, const Vector& b)
      : a_(a), q_(Matrix::Identity(a.rows(), a.rows())), r_(a.rows(), 0), qtb_(b) {}

  Index size() const { return static_cast<Index>(cols_.size()); }
  const std::vector<Index>& columns() const { return cols_; }

  // Appends column j; returns |new diagonal| for dependence checks.
  double append(Index j) {
    const Index m = a_.rows();
    const Index k = size();
    Vector v = q_.transpose() * a_.col(j);
    r_.conservativeResize(m, k + 1);
    r_.col(k).setZero();
    r_.col(k).head(k) = v.head(k);
    if (k < m) {
      const Index len = m - k;
      Vector tail = v.tail(len);
      double beta = 0.0, tau = 0.0;
      Vector essential(len > 1 ? len - 1 : 0);
      tail.makeHouseholder(essential, tau, beta);
      r_(k, k) = beta;
      // Q <- Q H and qtb <- H qtb on the trailing block.
      auto qb = q_.rightCols(len);
      Vector work(m);
      qb.applyHouseholderOnTheRight(essential, tau, work.data());
      Vector qt = qtb_.tail(len);
      Vector w1(1);
      qt.applyHouseholderOnTheLeft(essential, tau, w1.data());
      qtb_.tail(len) = qt;
    }
    cols_.push_back(j);
    return k < m ? std::abs(r_(k, k)) : 0.0;
  }

  void remove(Index pos) {
    const Index k = size();
    for (Index c = pos; c + 1 < k; ++c) r_.col(c) = r_.col(c + 1);
    r_.conservativeResize(Eigen::NoChange, k - 1);
    cols_.erase(cols_.begin() + pos);
    // Restore triangular form with Givens rotations on rows (i, i+1).
    for (Index i = pos; i < k - 1; ++i) {
      Eigen::JacobiRotation<double> g;
      g.makeGivens(r_(i, i), r_(i + 1, i));
      r_.applyOnTheLeft(i, i + 1, g.adjoint());
      q_.applyOnTheRight(i, i + 1, g);
      qtb_.applyOnTheLeft(i, i + 1, g.adjoint());
      r_(i + 1, i) = 0.0;
    }
  }

  Vector solve() const {
    const Index k = size();
    if (k == 0) return Vector();
    return r_.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(qtb_.head(k));
  }

 private:
  const Matrix& a_;
  Matrix q_;
  Matrix r_;
  Vector qtb_;
  std::vector<Index> cols_;
};

}  // namespace

NnlsResult lawson_hanson(const Matrix& A, const Vector& b, double tol_ratio) {
  if (A.rows() != b.size()) throw DimensionError("nnls: A and b have different row counts");
  if (!(tol_ratio > 0.0) || tol_ratio > 1.0) throw std::invalid_argument("nnls tolerance must lie in (0, 1]");
  const Index n = A.cols();
  const double bnorm = b.norm();
  NnlsResult out;
  if (bnorm == 0.0) {
    out.residual_ratio = 0.0;
    return out;
  }

  Vector omega = Vector::Zero(n);
  Vector resid = b;
  double ratio = 1.0;
  out.residual_ratio = ratio;
  if (ratio <= tol_ratio) return out;

  double col_max = 0.0;
  for (Index j = 0; j < n; ++j) col_max = std::max(col_max, A.col(j).norm());

  ActiveQr qr(A, b);
  std::vector<char> active(static_cast<std::size_t>(n), 0);
  std::vector<char> banned(static_cast<std::size_t>(n), 0);
  const int cap = static_cast<int>(10 * n);
  int it = 0;

  auto finish = [&]() {
    for (Index j = 0; j < n; ++j) {
      if (active[j] && omega(j) > 0.0) {
        out.support.push_back(j);
        out.weights.push_back(omega(j));
      }
    }
    out.residual_ratio = ratio;
    out.iterations = it;
    return out;
  };

  while (true) {
    if (it >= cap) {
      std::ostringstream os;
      os << "nnls hit the iteration cap " << cap << " at residual ratio " << ratio;
      throw NnlsNonTermination(os.str(), ratio);
    }
    const Vector w = A.transpose() * resid;
    const double thr = 1e-13 * col_max * resid.norm();
    Index enter = -1;
    double best = thr;
    for (Index j = 0; j < n; ++j) {
      if (active[j] || banned[j]) continue;
      if (w(j) > best) {
        best = w(j);
        enter = j;
      }
    }
    if (enter < 0) {
      std::ostringstream os;
      os << "nnls optimum reached at residual ratio " << ratio << " above tolerance " << tol_ratio;
      throw NnlsNonTermination(os.str(), ratio);
    }
    ++it;
    if (qr.append(enter) <= 1e-12 * A.col(enter).norm()) {
      qr.remove(qr.size() - 1);
      banned[enter] = 1;
      continue;
    }
    active[enter] = 1;

    Vector z = qr.solve();
    if (z(qr.size() - 1) <= 0.0) {
      // Numerically the entering column cannot carry positive weight.
      qr.remove(qr.size() - 1);
      active[enter] = 0;
      banned[enter] = 1;
      continue;
    }
    while (true) {
      const auto& cols = qr.columns();
      bool feasible = true;
      double alpha = 1.0;
      for (std::size_t p = 0; p < cols.size(); ++p) {
        if (z(p) <= 0.0) {
          feasible = false;
          const double o = omega(cols[p]);
          alpha = std::min(alpha, o / (o - z(p)));
        }
      }
      if (feasible) break;
      for (std::size_t p = 0; p < cols.size(); ++p)
        omega(cols[p]) += alpha * (z(p) - omega(cols[p]));
      // Drop every column driven to zero, highest position first.
      for (Index p = qr.size() - 1; p >= 0; --p) {
        const Index j = qr.columns()[p];
        if (omega(j) <= 1e-15 * std::max(1.0, omega.cwiseAbs().maxCoeff())) {
          omega(j) = 0.0;
          active[j] = 0;
          qr.remove(p);
        }
      }
      z = qr.solve();
      if (qr.size() == 0) break;
    }
    omega.setZero();
    for (std::size_t p = 0; p < qr.columns().size(); ++p) omega(qr.columns()[p]) = z(p);
    std::fill(banned.begin(), banned.end(), 0);

    resid = b;
    for (Index j : qr.columns()) resid.noalias() -= omega(j) * A.col(j);
    ratio = resid.norm() / bnorm;
    if (ratio <= tol_ratio) return finish();
  }
}

StackedQr::StackedQr(Index cols) : cols_(cols), r_(0, cols) {}

void StackedQr::add_rows(const Matrix& block) {
  if (block.cols() != cols_) throw DimensionError("stacked QR block has wrong column count");
  if (block.rows() == 0) return;
  Matrix stacked(r_.rows() + block.rows(), cols_);
  stacked.topRows(r_.rows()) = r_;
  stacked.bottomRows(block.rows()) = block;
  Eigen::HouseholderQR<Matrix> qr(std::move(stacked));
  const Index keep = std::min<Index>(qr.matrixQR().rows(), cols_);
  r_ = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
  rows_seen_ += block.rows();
}

Matrix StackedQr::factor() const { return r_; }

}  // namespace polyrom
