#pragma once

#include "polyrom/polysys.hpp"

#include <stdexcept>
#include <vector>

namespace polyrom {

struct NnlsResult {
  std::vector<Index> support;   // sorted column indices with positive weight
  std::vector<double> weights;  // aligned with support
  double residual_ratio = 1.0;  // |A w - b| / |b|
  int iterations = 0;
};

class NnlsNonTermination : public std::runtime_error {
 public:
  NnlsNonTermination(const std::string& what, double ratio)
      : std::runtime_error(what), ratio_(ratio) {}
  double ratio() const { return ratio_; }

 private:
  double ratio_;
};

/// Lawson-Hanson active-set NNLS for min |A w - b|, w >= 0, stopped at the first
/// iterate with |A w - b| <= tol_ratio |b|. Ties in the entering column are broken
/// by lowest index. Throws NnlsNonTermination after 10 * cols outer iterations or
/// when the optimum misses the tolerance.
NnlsResult lawson_hanson(const Matrix& A, const Vector& b, double tol_ratio);

/// Streams row blocks of [G | b] into an (N+1) x (N+1) triangular factor R with
/// [G | b]^T [G | b] = R^T R, so NNLS on the stacked system never stores G.
class StackedQr {
 public:
  explicit StackedQr(Index cols);

  void add_rows(const Matrix& block);
  Index rows_seen() const { return rows_seen_; }

  /// Triangular factor of the rows seen so far (min(rows_seen, cols) rows).
  Matrix factor() const;

 private:
  Index cols_;
  Index rows_seen_ = 0;
  Matrix r_;
};

}  // namespace polyrom
