#pragma once

#include "polyrom/fomsolve.hpp"
#include "polyrom/models.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace polyrom {

struct SnapshotMatrix {
  Matrix data;
  std::vector<std::pair<ParamVector, Index>> provenance;  // (mu, time index) per column
};

/// Horizontal concatenation; with include_initial = false the t_0 column of every
/// trajectory is skipped. `rows` optionally selects a contiguous state block
/// (offset, size), used to split lifted trajectories into variables.
SnapshotMatrix assemble_snapshots(const std::vector<Trajectory>& trajectories,
                                  bool include_initial,
                                  std::optional<std::pair<Index, Index>> rows = std::nullopt);

struct ReducedBasis {
  Matrix phi;
  Vector singular_values;  // retained spectrum, or block 0's for block bases
  Index n = 0;             // 0 until select_modes
  std::optional<LiftedSystemLayout> layout;
  std::vector<Index> block_modes;
  std::vector<Vector> block_singular_values;
  double eps_pod = 0.0;

  Index dim() const { return phi.rows(); }
};

/// POD via the method of snapshots. Every mode above the rank floor is kept in phi;
/// n stays 0.
ReducedBasis pod(const SnapshotMatrix& snapshots);

/// Smallest n with discarded energy fraction strictly below eps_pod.
Index modes_for_energy(const Vector& singular_values, double eps_pod);

ReducedBasis select_modes(const ReducedBasis& basis, double eps_pod);

/// Independent POD per variable with the same eps_pod; phi is block-diagonal.
ReducedBasis build_block_basis(const std::vector<SnapshotMatrix>& per_variable, double eps_pod);

/// Block-diagonal basis from already truncated per-variable bases.
ReducedBasis block_diagonal(const std::vector<ReducedBasis>& blocks);

}  // namespace polyrom
