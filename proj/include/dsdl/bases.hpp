#pragma once

#include <string_view>

#include "dsdl/core.hpp"

namespace dsdl {

enum class BasisKind { Identity, Dct, RandomOrthonormal };

std::string_view to_string(BasisKind kind) noexcept;
BasisKind parse_basis_kind(std::string_view name);

/// The fixed, known basis Phi (n x m) with orthonormal columns, m <= n.
struct FixedBasis {
  Matrix phi;
  BasisKind kind = BasisKind::Identity;

  Eigen::Index dim() const noexcept { return phi.rows(); }
  Eigen::Index size() const noexcept { return phi.cols(); }
};

FixedBasis identity_basis(Eigen::Index n);

/// Orthonormal DCT-II: column j is c_j cos(pi (2i + 1) j / (2n)).
FixedBasis dct_basis(Eigen::Index n);

/// m orthonormalized standard-normal n-vectors. Throws RankDeficient if three
/// independent draws all degenerate.
FixedBasis random_orthonormal_basis(Eigen::Index n, Eigen::Index m, RngStream& rng);

/// Basis of the given kind truncated to its first m columns. Only the random
/// kind consumes `rng`.
FixedBasis make_basis(BasisKind kind, Eigen::Index n, Eigen::Index m, RngStream& rng);

/// Wraps a loaded matrix, checking it has orthonormal columns.
FixedBasis basis_from_matrix(Matrix phi, double tolerance = 1e-8);

/// max |Phi^T Phi - I|
double orthonormality_defect(const Matrix& phi);

}  // namespace dsdl
