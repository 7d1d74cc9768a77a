#include "dsdl/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace dsdl {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AllWeightsZero: return "AllWeightsZero";
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::ZeroDataNorm: return "ZeroDataNorm";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "data matrix must have at least one row and column");
  }
  if (!all_finite(values_)) {
    throw Error(ErrorCode::NumericalFailure, "data matrix has non-finite entries");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ stream_id;
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    std::uint64_t w = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(w);
    words[i + 1] = static_cast<std::uint32_t>(w >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

std::int64_t RngStream::binomial(std::int64_t trials, double p) {
  if (trials <= 0) return 0;
  p = std::clamp(p, 0.0, 1.0);
  if (p == 0.0) return 0;
  if (p == 1.0) return trials;
  boost::random::binomial_distribution<std::int64_t, double> dist(trials, p);
  return dist(engine_);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "below(0)");
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(engine_);
}

Vector row_squared_norms(const Matrix& m) {
  return m.rowwise().squaredNorm();
}

CategoricalSampler::CategoricalSampler(std::span<const double> weights) {
  cumulative_.reserve(weights.size());
  double acc = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::NumericalFailure, "sampling weight is not finite");
    }
    if (w < 0.0) throw Error(ErrorCode::InvalidArgument, "sampling weight is negative");
    acc += w;
    cumulative_.push_back(acc);
  }
  if (!std::isfinite(acc)) {
    throw Error(ErrorCode::NumericalFailure, "sampling weights overflow");
  }
  if (acc <= 0.0) throw Error(ErrorCode::AllWeightsZero, "all sampling weights are zero");
  total_ = acc;
}

Eigen::Index CategoricalSampler::operator()(RngStream& rng) const {
  const double u = rng.uniform() * total_;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) {
    // u rounded up to the total: take the last entry with positive weight.
    it = std::lower_bound(cumulative_.begin(), cumulative_.end(), total_);
  }
  return static_cast<Eigen::Index>(it - cumulative_.begin());
}

Eigen::Index sample_categorical(std::span<const double> weights, RngStream& rng) {
  return CategoricalSampler(weights)(rng);
}

double relative_frobenius_error(const Matrix& y, const Matrix& d, const Matrix& x) {
  if (d.rows() != y.rows() || d.cols() != x.rows() || x.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "reconstruction shapes do not conform: Y " + std::to_string(y.rows()) + "x" +
                    std::to_string(y.cols()) + ", D " + std::to_string(d.rows()) + "x" +
                    std::to_string(d.cols()) + ", X " + std::to_string(x.rows()) + "x" +
                    std::to_string(x.cols()));
  }
  const double denom = y.norm();
  if (denom == 0.0) throw Error(ErrorCode::ZeroDataNorm, "data matrix has zero norm");
  return (y - d * x).norm() / denom;
}

bool all_finite(const Matrix& m) {
  return m.allFinite();
}

}  // namespace dsdl
