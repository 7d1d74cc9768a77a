#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dsdl/bases.hpp"
#include "dsdl/core.hpp"
#include "dsdl/kaczmarz.hpp"
#include "dsdl/quantum_overlap.hpp"

namespace dsdl {

// A (m x k): column j holds the basis coefficients of atom j, d_j = Phi a_j.
using CoefficientMatrix = Matrix;
// X (k x N): column i is the code of sample i.
using SparseCodeMatrix = Matrix;
// D = Phi A (n x k).
using EffectiveDictionary = Matrix;

enum class DeadAtomPolicy { ReplaceWorstSample, ReinitRandom };

// Relative magnitude above which an entry counts as nonzero in the trace.
inline constexpr double kTraceSparsityTau = 1e-3;

struct TrainConfig {
  int outer_iters = 20;
  Eigen::Index atoms = 48;
  std::optional<int> code_iters;  // unset: 2n
  std::optional<int> dict_iters;  // unset: 2n
  std::optional<double> ridge_lambda;
  RowSampling row_sampling = RowSampling::SquaredNorm;
  double residual_tolerance = 0.0;
  std::optional<double> atom_use_threshold;  // unset: 1e-6 max|X|
  DeadAtomPolicy dead_atom_policy = DeadAtomPolicy::ReplaceWorstSample;
  std::optional<int> hard_threshold_s;
  std::uint64_t master_seed = 1;
  int threads = 1;

  void validate() const;
  KaczmarzConfig code_solver(Eigen::Index n) const;
  KaczmarzConfig dict_solver(Eigen::Index n) const;
};

struct TraceRow {
  int iter = 0;
  double rel_error = 0.0;
  double code_sparsity = 0.0;
  double coef_sparsity = 0.0;
  std::uint64_t oracle_calls = 0;  // cumulative
  int dead_atoms = 0;              // replaced during this iteration
};

using TrainingTrace = std::vector<TraceRow>;

/// Sub-stream ids. Sparse coding of sample i in outer iteration t uses
/// t * N + i; the other consumers live in disjoint tagged ranges.
namespace streams {
inline constexpr std::uint64_t kDictTag = 1ULL << 60;
inline constexpr std::uint64_t kInitTag = 2ULL << 60;
inline constexpr std::uint64_t kReinitTag = 3ULL << 60;

inline std::uint64_t coding(int outer_iter, Eigen::Index samples, Eigen::Index i) {
  return static_cast<std::uint64_t>(outer_iter) * static_cast<std::uint64_t>(samples) +
         static_cast<std::uint64_t>(i);
}
inline std::uint64_t dict(int outer_iter, Eigen::Index atoms, Eigen::Index j) {
  return kDictTag | (static_cast<std::uint64_t>(outer_iter) * static_cast<std::uint64_t>(atoms) +
                     static_cast<std::uint64_t>(j));
}
inline std::uint64_t reinit(int outer_iter, Eigen::Index atoms, Eigen::Index j) {
  return kReinitTag |
         (static_cast<std::uint64_t>(outer_iter) * static_cast<std::uint64_t>(atoms) +
          static_cast<std::uint64_t>(j));
}
}  // namespace streams

/// Hooks into the trainer, mostly for tests and instrumentation. The rescale
/// hooks fire around every pure atom/code rescaling (normalization), never
/// around thresholding or replacement.
struct TrainObserver {
  std::function<void(Eigen::Index atom, const CoefficientMatrix&, const SparseCodeMatrix&)>
      before_rescale;
  std::function<void(Eigen::Index atom, const CoefficientMatrix&, const SparseCodeMatrix&)>
      after_rescale;
  std::function<void(const TraceRow&, const CoefficientMatrix&, const SparseCodeMatrix&)>
      on_iteration;
};

EffectiveDictionary effective_dictionary(const FixedBasis& phi, const CoefficientMatrix& a);

/// Random standard-normal columns scaled so that ||Phi a_j|| = 1.
CoefficientMatrix init_coefficients(const FixedBasis& phi, Eigen::Index k, RngStream& rng);

struct CodingResult {
  SparseCodeMatrix x;
  std::uint64_t oracle_calls = 0;
};

/// Early-stopped Kaczmarz from zero for every sample over D = Phi A.
/// Samples run on `cfg.threads` workers; the result does not depend on it.
CodingResult sparse_coding_step(const DataMatrix& y, const FixedBasis& phi,
                                const CoefficientMatrix& a, const TrainConfig& cfg,
                                const OverlapOracle& oracle, int outer_iter);

struct DictUpdateResult {
  CoefficientMatrix a;
  SparseCodeMatrix x;
  int dead_replaced = 0;
  std::uint64_t oracle_calls = 0;
};

/// Sequential sweep over atoms: restricted rank-1 residual target, warm-started
/// Kaczmarz in the Phi basis, normalization (with the inverse scale pushed
/// into the codes), optional top-s thresholding and dead-atom replacement.
DictUpdateResult dictionary_update_step(const DataMatrix& y, const FixedBasis& phi,
                                        const CoefficientMatrix& a, const SparseCodeMatrix& x,
                                        const TrainConfig& cfg, const OverlapOracle& oracle,
                                        int outer_iter, const TrainObserver* observer = nullptr);

/// Replaces atom j in place and zeroes its code row. ReplaceWorstSample uses
/// the sample with the largest residual, skipping samples listed in
/// `taken` (updated with the chosen one) so that several dead atoms in one
/// sweep get distinct replacements.
void replace_dead_atom(const DataMatrix& y, const FixedBasis& phi, CoefficientMatrix& a,
                       SparseCodeMatrix& x, Eigen::Index j, DeadAtomPolicy policy,
                       RngStream& rng, std::vector<Eigen::Index>* taken = nullptr);

struct TrainResult {
  CoefficientMatrix a;
  SparseCodeMatrix x;
  TrainingTrace trace;
};

/// Raised by train() after initialization; carries the trace up to the failure.
class TrainingError : public Error {
 public:
  TrainingError(const Error& cause, TrainingTrace trace)
      : Error(cause.code(), cause.what()), trace_(std::move(trace)) {}

  const TrainingTrace& trace() const noexcept { return trace_; }

 private:
  TrainingTrace trace_;
};

TrainResult train(const DataMatrix& y, const FixedBasis& phi, const TrainConfig& cfg,
                  const OverlapOracle& oracle, const TrainObserver* observer = nullptr);

TrainResult train(const DataMatrix& y, const FixedBasis& phi, const TrainConfig& cfg,
                  const OracleConfig& ocfg);

}  // namespace dsdl
