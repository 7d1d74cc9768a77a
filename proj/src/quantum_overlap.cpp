#include "dsdl/quantum_overlap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsdl {

void OracleConfig::validate() const {
  if (mode == OracleMode::ShotNoise && shots < 1) {
    throw Error(ErrorCode::ConfigInvalid, "oracle.shots must be >= 1 in shot_noise mode");
  }
  if (!(zero_norm_epsilon >= 0.0) || !std::isfinite(zero_norm_epsilon)) {
    throw Error(ErrorCode::ConfigInvalid, "oracle.zero_norm_epsilon must be finite and >= 0");
  }
}

int qubits_for(Eigen::Index dim) {
  int q = 0;
  while ((Eigen::Index{1} << q) < dim) ++q;
  return q;
}

namespace {

double l2_norm(std::span<const double> v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).norm();
}

}  // namespace

QuantumState amplitude_encode(std::span<const double> v, double zero_norm_epsilon) {
  const auto dim = static_cast<Eigen::Index>(v.size());
  Eigen::Map<const Vector> src(v.data(), dim);
  if (!src.allFinite()) {
    throw Error(ErrorCode::NumericalFailure, "cannot encode a vector with non-finite entries");
  }
  const double norm = src.norm();
  if (dim == 0 || norm <= zero_norm_epsilon) {
    throw Error(ErrorCode::ZeroNormVector, "vector norm is at or below the null threshold");
  }
  QuantumState s;
  s.source_dim = dim;
  s.qubits = qubits_for(dim);
  s.amplitudes = Vector::Zero(Eigen::Index{1} << s.qubits);
  s.amplitudes.head(dim) = src / norm;
  return s;
}

QuantumState pad_to(const QuantumState& s, int qubits) {
  if (qubits < s.qubits) {
    throw Error(ErrorCode::DimensionMismatch, "cannot pad a state onto a smaller register");
  }
  QuantumState out = s;
  out.qubits = qubits;
  out.amplitudes = Vector::Zero(Eigen::Index{1} << qubits);
  out.amplitudes.head(s.amplitudes.size()) = s.amplitudes;
  return out;
}

double exact_overlap(const QuantumState& a, const QuantumState& b) {
  if (a.amplitudes.size() != b.amplitudes.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "overlap of states on " + std::to_string(a.qubits) + " and " +
                    std::to_string(b.qubits) + " qubits");
  }
  return a.amplitudes.dot(b.amplitudes);
}

double estimate_overlap(const QuantumState& a, const QuantumState& b, std::int64_t shots,
                        RngStream& rng) {
  if (shots < 1) throw Error(ErrorCode::InvalidArgument, "shots must be >= 1");
  const double o = std::clamp(exact_overlap(a, b), -1.0, 1.0);
  const double p = 0.5 * (1.0 + o);
  const std::int64_t hits = rng.binomial(shots, p);
  return 2.0 * static_cast<double>(hits) / static_cast<double>(shots) - 1.0;
}

double inner_product(std::span<const double> x, std::span<const double> y,
                     const OracleConfig& cfg, RngStream& rng) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "inner product of vectors of length " + std::to_string(x.size()) + " and " +
                    std::to_string(y.size()));
  }
  const double nx = l2_norm(x);
  const double ny = l2_norm(y);
  if (nx <= cfg.zero_norm_epsilon || ny <= cfg.zero_norm_epsilon) return 0.0;
  const QuantumState sx = amplitude_encode(x, cfg.zero_norm_epsilon);
  const QuantumState sy = amplitude_encode(y, cfg.zero_norm_epsilon);
  const double overlap = cfg.mode == OracleMode::Exact
                             ? exact_overlap(sx, sy)
                             : estimate_overlap(sx, sy, cfg.shots, rng);
  return nx * ny * overlap;
}

QuantumOverlapOracle::QuantumOverlapOracle(OracleConfig cfg) : cfg_(cfg) {
  cfg_.validate();
}

double QuantumOverlapOracle::inner_product(std::span<const double> x,
                                           std::span<const double> y, RngStream& rng) const {
  return dsdl::inner_product(x, y, cfg_, rng);
}

}  // namespace dsdl
