#include "support.hpp"

#include "polyrom/basis.hpp"
#include "polyrom/metrics.hpp"

#include <doctest.h>

#include <Eigen/SVD>

using namespace polyrom;
using namespace testing_support;

namespace {

Trajectory fake_trajectory(const Matrix& states, const ParamVector& mu) {
  Trajectory t;
  t.states = states;
  t.mu = mu;
  t.dt = 0.1;
  return t;
}

SnapshotMatrix snapshots_of(const Matrix& x) {
  SnapshotMatrix s;
  s.data = x;
  for (Index c = 0; c < x.cols(); ++c) s.provenance.emplace_back(ParamVector{}, c);
  return s;
}

}  // namespace

TEST_CASE("assemble_snapshots") {
  std::mt19937_64 rng(1);
  SUBCASE("skipping the initial column") {
    const Trajectory t = fake_trajectory(Matrix::Random(4, 501), {1.0});
    CHECK(assemble_snapshots({t}, false).data.cols() == 500);
    CHECK(assemble_snapshots({t}, true).data.cols() == 501);
  }
  SUBCASE("order and provenance") {
    const Trajectory a = fake_trajectory(Matrix::Random(3, 3), {1.0});
    const Trajectory b = fake_trajectory(Matrix::Random(3, 3), {2.0});
    const SnapshotMatrix s = assemble_snapshots({a, b}, true);
    REQUIRE(s.data.cols() == 6);
    CHECK(s.data.leftCols(3) == a.states);
    CHECK(s.data.rightCols(3) == b.states);
    CHECK(s.provenance[4].first == ParamVector{2.0});
    CHECK(s.provenance[4].second == 1);
  }
  SUBCASE("row block selection") {
    const Trajectory a = fake_trajectory(Matrix::Random(6, 3), {1.0});
    CHECK(assemble_snapshots({a}, true, std::make_pair(Index(3), Index(3))).data == a.states.bottomRows(3));
  }
  SUBCASE("errors") {
    CHECK_THROWS(assemble_snapshots({}, true));
    const Trajectory a = fake_trajectory(Matrix::Random(3, 2), {1.0});
    const Trajectory b = fake_trajectory(Matrix::Random(4, 2), {1.0});
    CHECK_THROWS(assemble_snapshots({a, b}, true));
  }
}

TEST_CASE("pod") {
  SUBCASE("rank one") {
    Matrix x = Matrix::Zero(5, 3);
    x.col(1) << 3, 0, 4, 0, 0;
    const ReducedBasis b = pod(snapshots_of(x));
    REQUIRE(b.singular_values.size() == 1);
    CHECK(b.singular_values(0) == doctest::Approx(5.0));
    CHECK(rel_err(b.phi.col(0), x.col(1) / 5.0) < 1e-12);
  }
  SUBCASE("orthogonal columns") {
    Matrix x = Matrix::Zero(4, 2);
    x(0, 0) = 2.0;
    x(1, 1) = 1.0;
    const ReducedBasis b = pod(snapshots_of(x));
    REQUIRE(b.singular_values.size() == 2);
    CHECK(b.singular_values(0) == doctest::Approx(2.0));
    CHECK(b.singular_values(1) == doctest::Approx(1.0));
    CHECK(rel_err(b.phi.leftCols(2), Matrix::Identity(4, 2)) < 1e-12);
  }
  SUBCASE("matches a dense SVD on both Gram sides") {
    std::mt19937_64 rng(7);
    for (auto [r, c] : {std::pair<Index, Index>{20, 50}, {50, 20}}) {
      const Matrix x = Matrix::Random(r, c);
      const ReducedBasis b = pod(snapshots_of(x));
      Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU);
      const Index k = std::min(r, c);
      REQUIRE(b.singular_values.size() == k);
      CHECK(rel_err(b.singular_values, svd.singularValues()) < 1e-10);
      for (Index j = 0; j < k; ++j) {
        const double d = std::abs(b.phi.col(j).dot(svd.matrixU().col(j)));
        CHECK(d == doctest::Approx(1.0).epsilon(1e-8));
        Index imax = 0;
        b.phi.col(j).cwiseAbs().maxCoeff(&imax);
        CHECK(b.phi(imax, j) > 0.0);
      }
      CHECK((b.phi.transpose() * b.phi - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("zero snapshots are rejected") { CHECK_THROWS(pod(snapshots_of(Matrix::Zero(3, 4)))); }
  SUBCASE("identical input gives identical output") {
    const Matrix x = Matrix::Random(30, 12);
    const ReducedBasis a = pod(snapshots_of(x)), b = pod(snapshots_of(x));
    CHECK(a.singular_values == b.singular_values);
    CHECK(a.phi == b.phi);
  }
}

TEST_CASE("mode selection") {
  Vector s(4);
  s << 2.0, 1.0, 0.0, 0.0;
  CHECK(modes_for_energy(s, 0.1) == 2);
  CHECK(modes_for_energy(s, 1.0) == 1);
  Vector t(5);
  t << 5, 3, 2, 1, 0.5;
  Index prev = 100;
  for (double eps : {1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0}) {
    const Index n = modes_for_energy(t, eps);
    CHECK(n <= prev);
    prev = n;
  }
  std::mt19937_64 rng(3);
  Matrix x = Matrix::Random(40, 25);
  const ReducedBasis full = pod(snapshots_of(x));
  const ReducedBasis b = select_modes(full, 1e-2);
  CHECK(b.phi.cols() == b.n);
  CHECK(b.eps_pod == 1e-2);
  // Training-set projection error equals the discarded energy.
  const Vector& sv = full.singular_values;
  const double discarded = sv.tail(sv.size() - b.n).squaredNorm() / sv.squaredNorm();
  CHECK(projection_error(x, b.phi) == doctest::Approx(discarded).epsilon(1e-10));
  CHECK(discarded < 1e-2);
}

TEST_CASE("block bases") {
  std::mt19937_64 rng(5);
  const Matrix x = Matrix::Random(10, 30);
  const ReducedBasis b = build_block_basis({snapshots_of(x), snapshots_of(x)}, 0.05);
  REQUIRE(b.block_modes.size() == 2);
  CHECK(b.block_modes[0] == b.block_modes[1]);
  CHECK(b.n == b.block_modes[0] + b.block_modes[1]);
  CHECK(b.phi.rows() == 20);
  CHECK((b.phi.transpose() * b.phi - Matrix::Identity(b.n, b.n)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(b.phi.block(10, 0, 10, b.block_modes[0]).norm() == 0.0);
  REQUIRE(b.layout);
  CHECK(b.layout->total() == 20);
}
