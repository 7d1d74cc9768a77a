#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "dsdl/core.hpp"
#include "dsdl/quantum_overlap.hpp"

namespace dsdl {

enum class RowSampling { SquaredNorm, Uniform };

struct KaczmarzConfig {
  int max_iters = 1;
  // Unset: 1e-3 times the mean squared row norm of the system.
  std::optional<double> ridge_lambda;
  RowSampling row_sampling = RowSampling::SquaredNorm;
  // Relative residual for early exit, checked every len(y) steps; 0 disables.
  double residual_tolerance = 0.0;

  void validate() const;
};

double default_ridge_lambda(const Matrix& m);

/// One ridge-regularized projection:
///   x + (y_i - <m_i, x>) / (||m_i||^2 + lambda) * m_i.
/// The oracle is not consulted when x is exactly zero. `oracle_called`, if
/// given, reports whether it was.
Vector kaczmarz_step(const Vector& x, std::span<const double> row, double y_i, double lambda,
                     const OverlapOracle& oracle, RngStream& rng,
                     bool* oracle_called = nullptr);

struct SolveResult {
  Vector x;
  int iterations = 0;
  std::uint64_t oracle_calls = 0;
};

/// Randomized Kaczmarz on M x ~= y from x0, for up to cfg.max_iters steps.
/// Rows with norm <= the oracle's null threshold are never selected; throws
/// AllWeightsZero if that leaves nothing to sample.
SolveResult solve(const Matrix& m, const Vector& y, const KaczmarzConfig& cfg,
                  const OverlapOracle& oracle, RngStream& rng, const Vector& x0);

/// Same as solve() but with the rows already laid out as columns of `rows`
/// (i.e. rows = M^T), which is how the trainer stores its systems.
SolveResult solve_transposed(const Matrix& rows, const Vector& y, const KaczmarzConfig& cfg,
                             const OverlapOracle& oracle, RngStream& rng, const Vector& x0);

}  // namespace dsdl
