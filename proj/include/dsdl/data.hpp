#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dsdl/bases.hpp"
#include "dsdl/core.hpp"
#include "dsdl/trainer.hpp"

namespace dsdl {

struct SyntheticSpec {
  Eigen::Index n = 32;
  Eigen::Index m = 32;
  Eigen::Index k = 48;
  Eigen::Index samples = 400;
  Eigen::Index s_code = 4;
  Eigen::Index s_atom = 6;
  double noise_sigma = 0.0;
  BasisKind basis_kind = BasisKind::Dct;
  std::uint64_t seed = 1;
  std::uint64_t basis_seed = 1;  // only used by RandomOrthonormal

  void validate() const;
};

/// Reference instances used by the acceptance suite.
SyntheticSpec syn_a();
SyntheticSpec syn_i();

struct SyntheticInstance {
  DataMatrix y;
  FixedBasis phi;
  CoefficientMatrix a_true;
  SparseCodeMatrix x_true;
  SyntheticSpec spec;
};

/// Y = Phi A_true X_true + sigma G with s_atom-sparse unit atoms and
/// s_code-sparse standard-normal codes.
SyntheticInstance generate_synthetic(const SyntheticSpec& spec);

/// CSV: a `rows,cols` header, then one line per row at 17 significant digits.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

void save_trace(const std::filesystem::path& path, const TrainingTrace& trace);

/// Standalone 800x400 SVG line chart of rel_error against iteration.
std::string render_trace_svg(const TrainingTrace& trace);
void save_trace_svg(const std::filesystem::path& path, const TrainingTrace& trace);

/// Fraction of entries with |M_ij| > tau_rel * max|M|; 0 for an all-zero matrix.
double sparsity_fraction(const Matrix& m, double tau_rel);

/// Greedy one-to-one matching of columns by |cosine|, averaged over matches.
double atom_recovery_score(const Matrix& learned, const Matrix& truth);

}  // namespace dsdl
