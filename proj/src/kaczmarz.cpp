#include "dsdl/kaczmarz.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dsdl {

void KaczmarzConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::ConfigInvalid, "max_iters must be >= 1");
  if (ridge_lambda && !(*ridge_lambda >= 0.0 && std::isfinite(*ridge_lambda))) {
    throw Error(ErrorCode::ConfigInvalid, "ridge_lambda must be finite and >= 0");
  }
  if (!(residual_tolerance >= 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "residual_tolerance must be >= 0");
  }
}

double default_ridge_lambda(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return 1e-3 * m.squaredNorm() / static_cast<double>(m.rows());
}

Vector kaczmarz_step(const Vector& x, std::span<const double> row, double y_i, double lambda,
                     const OverlapOracle& oracle, RngStream& rng, bool* oracle_called) {
  if (static_cast<Eigen::Index>(row.size()) != x.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "row length " + std::to_string(row.size()) + " does not match iterate length " +
                    std::to_string(x.size()));
  }
  Eigen::Map<const Vector> m_i(row.data(), x.size());
  const bool at_origin = (x.array() == 0.0).all();
  const double dot =
      at_origin ? 0.0 : oracle.inner_product(row, std::span<const double>(x.data(), x.size()), rng);
  if (oracle_called) *oracle_called = !at_origin;
  const double step = (y_i - dot) / (m_i.squaredNorm() + lambda);
  return x + step * m_i;
}

SolveResult solve_transposed(const Matrix& rows, const Vector& y, const KaczmarzConfig& cfg,
                             const OverlapOracle& oracle, RngStream& rng, const Vector& x0) {
  cfg.validate();
  if (rows.cols() != y.size() || rows.rows() != x0.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "system with " + std::to_string(rows.cols()) + " equations and " +
                    std::to_string(rows.rows()) + " unknowns got rhs of length " +
                    std::to_string(y.size()) + " and x0 of length " + std::to_string(x0.size()));
  }

  const Eigen::Index equations = rows.cols();
  const double eps = oracle.zero_norm_epsilon();
  const Vector sq_norms = rows.colwise().squaredNorm().transpose();
  std::vector<double> weights(static_cast<std::size_t>(equations));
  for (Eigen::Index i = 0; i < equations; ++i) {
    const bool live = std::sqrt(sq_norms[i]) > eps;
    weights[static_cast<std::size_t>(i)] =
        !live ? 0.0 : (cfg.row_sampling == RowSampling::SquaredNorm ? sq_norms[i] : 1.0);
  }
  const CategoricalSampler sampler(weights);
  const double lambda = cfg.ridge_lambda ? *cfg.ridge_lambda : 1e-3 * sq_norms.mean();

  const double y_norm = y.norm();
  SolveResult out{x0, 0, 0};
  for (int t = 0; t < cfg.max_iters; ++t) {
    const Eigen::Index i = sampler(rng);
    bool called = false;
    out.x = kaczmarz_step(out.x, std::span<const double>(rows.col(i).data(), rows.rows()), y[i],
                          lambda, oracle, rng, &called);
    ++out.iterations;
    if (called) ++out.oracle_calls;

    if (cfg.residual_tolerance > 0.0 && out.iterations % equations == 0) {
      const double r = (rows.transpose() * out.x - y).norm();
      const double rel = y_norm > 0.0 ? r / y_norm : r;
      if (rel < cfg.residual_tolerance) break;
    }
  }
  return out;
}

SolveResult solve(const Matrix& m, const Vector& y, const KaczmarzConfig& cfg,
                  const OverlapOracle& oracle, RngStream& rng, const Vector& x0) {
  return solve_transposed(m.transpose(), y, cfg, oracle, rng, x0);
}

}  // namespace dsdl
