#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dsdl/error.hpp"

namespace dsdl {

// Column-major throughout: samples and atoms are columns.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Data Y (n x N), one sample per column. Entries must be finite.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  Eigen::Index samples() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
};

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Streams with distinct ids are statistically independent, so every
/// stochastic consumer can own one and parallel execution reproduces the
/// serial draw sequence exactly. The engine is mt19937_64 (whose output is
/// fixed by the standard) seeded through a splitmix64 mix of both keys;
/// distributions come from Boost.Random, which unlike the standard library
/// distributions produce the same values on every platform.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Binomial(trials, p) count; p is clamped into [0, 1].
  std::int64_t binomial(std::int64_t trials, double p);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Squared l2 norm of every row of m.
Vector row_squared_norms(const Matrix& m);

/// Draws index i with probability weights[i] / sum(weights).
/// Throws AllWeightsZero when the weights sum to zero.
Eigen::Index sample_categorical(std::span<const double> weights, RngStream& rng);

/// Categorical sampler with the cumulative table built once. Draws match
/// sample_categorical on the same weights and stream.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights);

  Eigen::Index operator()(RngStream& rng) const;
  double total() const noexcept { return total_; }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

/// ||Y - D X||_F / ||Y||_F. Throws ZeroDataNorm for Y = 0.
double relative_frobenius_error(const Matrix& y, const Matrix& d, const Matrix& x);

bool all_finite(const Matrix& m);

}  // namespace dsdl
