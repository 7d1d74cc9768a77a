#include "dsdl/bases.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dsdl {

std::string_view to_string(BasisKind kind) noexcept {
  switch (kind) {
    case BasisKind::Identity: return "identity";
    case BasisKind::Dct: return "dct";
    case BasisKind::RandomOrthonormal: return "random_orthonormal";
  }
  return "unknown";
}

BasisKind parse_basis_kind(std::string_view name) {
  if (name == "identity") return BasisKind::Identity;
  if (name == "dct") return BasisKind::Dct;
  if (name == "random_orthonormal") return BasisKind::RandomOrthonormal;
  throw Error(ErrorCode::ConfigInvalid, "unknown basis kind '" + std::string(name) +
                                            "' (expected identity, dct or random_orthonormal)");
}

namespace {

void require_positive(Eigen::Index n, const char* what) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be >= 1");
}

}  // namespace

FixedBasis identity_basis(Eigen::Index n) {
  require_positive(n, "basis dimension");
  return {Matrix::Identity(n, n), BasisKind::Identity};
}

FixedBasis dct_basis(Eigen::Index n) {
  require_positive(n, "basis dimension");
  Matrix phi(n, n);
  const double nd = static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = j == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
    for (Eigen::Index i = 0; i < n; ++i) {
      phi(i, j) = c * std::cos(std::numbers::pi * static_cast<double>((2 * i + 1) * j) / (2.0 * nd));
    }
  }
  return {std::move(phi), BasisKind::Dct};
}

FixedBasis random_orthonormal_basis(Eigen::Index n, Eigen::Index m, RngStream& rng) {
  require_positive(n, "basis dimension");
  require_positive(m, "basis size");
  if (m > n) {
    throw Error(ErrorCode::InvalidArgument, "basis size m must not exceed dimension n");
  }
  constexpr int kAttempts = 3;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Matrix q(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) q(i, j) = rng.normal();
    }
    // Modified Gram-Schmidt, applied twice for orthogonality to round-off.
    bool degenerate = false;
    for (Eigen::Index j = 0; j < m && !degenerate; ++j) {
      const double original = q.col(j).norm();
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index p = 0; p < j; ++p) q.col(j) -= q.col(p).dot(q.col(j)) * q.col(p);
      }
      const double remaining = q.col(j).norm();
      if (!(remaining > 1e-10 * original)) {
        degenerate = true;
      } else {
        q.col(j) /= remaining;
      }
    }
    if (!degenerate) return {std::move(q), BasisKind::RandomOrthonormal};
  }
  throw Error(ErrorCode::RankDeficient, "orthonormalization degenerated in every attempt");
}

FixedBasis make_basis(BasisKind kind, Eigen::Index n, Eigen::Index m, RngStream& rng) {
  require_positive(m, "basis size");
  if (m > n) throw Error(ErrorCode::InvalidArgument, "basis size m must not exceed dimension n");
  switch (kind) {
    case BasisKind::Identity: {
      FixedBasis b = identity_basis(n);
      b.phi = b.phi.leftCols(m).eval();
      return b;
    }
    case BasisKind::Dct: {
      FixedBasis b = dct_basis(n);
      b.phi = b.phi.leftCols(m).eval();
      return b;
    }
    case BasisKind::RandomOrthonormal:
      return random_orthonormal_basis(n, m, rng);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown basis kind");
}

double orthonormality_defect(const Matrix& phi) {
  const Matrix gram = phi.transpose() * phi;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

FixedBasis basis_from_matrix(Matrix phi, double tolerance) {
  if (phi.rows() < 1 || phi.cols() < 1 || phi.cols() > phi.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "basis must be n x m with 1 <= m <= n");
  }
  if (!phi.allFinite()) throw Error(ErrorCode::NumericalFailure, "basis has non-finite entries");
  const double defect = orthonormality_defect(phi);
  if (!(defect < tolerance)) {
    throw Error(ErrorCode::InvalidArgument,
                "basis columns are not orthonormal (max |Phi^T Phi - I| = " +
                    std::to_string(defect) + ")");
  }
  BasisKind kind = BasisKind::RandomOrthonormal;
  if (phi.rows() == phi.cols() && phi == Matrix::Identity(phi.rows(), phi.cols())) {
    kind = BasisKind::Identity;
  } else if (phi.rows() == phi.cols() && (phi - dct_basis(phi.rows()).phi).cwiseAbs().maxCoeff() < 1e-12) {
    kind = BasisKind::Dct;
  }
  return {std::move(phi), kind};
}

}  // namespace dsdl
