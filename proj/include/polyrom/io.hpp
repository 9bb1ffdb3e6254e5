#pragma once

#include "polyrom/basis.hpp"
#include "polyrom/ecsw.hpp"
#include "polyrom/fomsolve.hpp"
#include "polyrom/hrf.hpp"

#include <filesystem>
#include <string>

namespace polyrom {

/// Binary dense matrix: little-endian uint64 rows, uint64 cols, then column-major float64.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// `stem`.bin holds the states, `stem`.json the model, mu, dt, scheme and iterations.
void write_trajectory(const std::filesystem::path& stem, const Trajectory& t);
Trajectory read_trajectory(const std::filesystem::path& stem);

/// Reduced trajectory with its method tag and the basis it lives in.
void write_reduced_trajectory(const std::filesystem::path& stem, const Matrix& reduced,
                              const std::string& method, const std::string& basis_ref,
                              const ParamVector& mu);

/// phi.bin plus basis.json (spectrum, block layout, eps_pod, n) inside `dir`.
void write_basis(const std::filesystem::path& dir, const ReducedBasis& basis);
ReducedBasis read_basis(const std::filesystem::path& dir);

/// One .bin per tensor plus manifest.json listing names, shapes and affine tags.
void write_hrf_galerkin(const std::filesystem::path& dir, const HrfGalerkinOperators& ops);
HrfGalerkinOperators read_hrf_galerkin(const std::filesystem::path& dir);
void write_hrf_lspg(const std::filesystem::path& dir, const HrfLspgOperators& ops);
HrfLspgOperators read_hrf_lspg(const std::filesystem::path& dir);

void write_weights_file(const std::filesystem::path& path, const EcswWeights& w);
EcswWeights read_weights_file(const std::filesystem::path& path);

std::string affine_tag(const AffineScalar& s);
AffineScalar affine_from_tag(const std::string& tag);

}  // namespace polyrom
