#pragma once

#include <cstdint>
#include <span>

#include "dsdl/core.hpp"

namespace dsdl {

/// Amplitude-encoded real vector on the smallest register that holds it.
struct QuantumState {
  Vector amplitudes;      // length 2^qubits, unit l2 norm
  Eigen::Index source_dim = 0;
  int qubits = 0;
};

enum class OracleMode { Exact, ShotNoise };

struct OracleConfig {
  OracleMode mode = OracleMode::Exact;
  std::int64_t shots = 1024;
  double zero_norm_epsilon = 1e-12;

  void validate() const;
};

/// Smallest q with 2^q >= dim.
int qubits_for(Eigen::Index dim);

/// Normalizes v and zero-pads it to the next power of two.
/// Throws ZeroNormVector if ||v|| <= zero_norm_epsilon.
QuantumState amplitude_encode(std::span<const double> v, double zero_norm_epsilon = 0.0);

/// Zero-pads a state onto a larger register.
QuantumState pad_to(const QuantumState& s, int qubits);

/// <a|b> for real amplitudes. Throws DimensionMismatch on register mismatch.
double exact_overlap(const QuantumState& a, const QuantumState& b);

/// Hadamard-test estimate of <a|b>: the ancilla reads 0 with probability
/// p = (1 + <a|b>) / 2, so 2k/shots - 1 with k ~ Binomial(shots, p) is an
/// unbiased estimator with variance (1 - o^2) / shots.
double estimate_overlap(const QuantumState& a, const QuantumState& b, std::int64_t shots,
                        RngStream& rng);

/// ||x|| ||y|| times the (exact or estimated) overlap of the encoded vectors.
/// Norms stay classical; a vector below the null threshold contributes 0.
double inner_product(std::span<const double> x, std::span<const double> y,
                     const OracleConfig& cfg, RngStream& rng);

/// Source of inner products for the Kaczmarz solver. Implementations must be
/// safe to call concurrently as long as each caller owns its RngStream.
class OverlapOracle {
 public:
  virtual ~OverlapOracle() = default;

  virtual double inner_product(std::span<const double> x, std::span<const double> y,
                               RngStream& rng) const = 0;
  virtual double zero_norm_epsilon() const = 0;
};

/// The default oracle: amplitude encoding plus exact or shot-noise overlaps.
class QuantumOverlapOracle final : public OverlapOracle {
 public:
  explicit QuantumOverlapOracle(OracleConfig cfg);

  double inner_product(std::span<const double> x, std::span<const double> y,
                       RngStream& rng) const override;
  double zero_norm_epsilon() const override { return cfg_.zero_norm_epsilon; }
  const OracleConfig& config() const noexcept { return cfg_; }

 private:
  OracleConfig cfg_;
};

}  // namespace dsdl
