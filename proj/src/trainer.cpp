#include "dsdl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "dsdl/data.hpp"

namespace dsdl {

void TrainConfig::validate() const {
  if (outer_iters < 1) throw Error(ErrorCode::ConfigInvalid, "train.outer_iters must be >= 1");
  if (atoms < 1) throw Error(ErrorCode::ConfigInvalid, "train.atoms must be >= 1");
  if (code_iters && *code_iters < 1) {
    throw Error(ErrorCode::ConfigInvalid, "kaczmarz.max_iters_code must be >= 1");
  }
  if (dict_iters && *dict_iters < 1) {
    throw Error(ErrorCode::ConfigInvalid, "kaczmarz.max_iters_dict must be >= 1");
  }
  if (ridge_lambda && !(*ridge_lambda >= 0.0 && std::isfinite(*ridge_lambda))) {
    throw Error(ErrorCode::ConfigInvalid, "kaczmarz.ridge_lambda must be finite and >= 0");
  }
  if (!(residual_tolerance >= 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "kaczmarz.residual_tolerance must be >= 0");
  }
  if (atom_use_threshold && !(*atom_use_threshold >= 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "train.atom_use_threshold must be >= 0");
  }
  if (hard_threshold_s && *hard_threshold_s < 1) {
    throw Error(ErrorCode::ConfigInvalid, "train.hard_threshold_s must be >= 1");
  }
  if (threads < 1) throw Error(ErrorCode::ConfigInvalid, "train.threads must be >= 1");
}

KaczmarzConfig TrainConfig::code_solver(Eigen::Index n) const {
  return {code_iters.value_or(static_cast<int>(2 * n)), ridge_lambda, row_sampling,
          residual_tolerance};
}

KaczmarzConfig TrainConfig::dict_solver(Eigen::Index n) const {
  return {dict_iters.value_or(static_cast<int>(2 * n)), ridge_lambda, row_sampling,
          residual_tolerance};
}

EffectiveDictionary effective_dictionary(const FixedBasis& phi, const CoefficientMatrix& a) {
  if (phi.size() != a.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient rows do not match the basis size");
  }
  return phi.phi * a;
}

namespace {

constexpr double kDeadScale = 1e-12;

Vector random_atom(const FixedBasis& phi, RngStream& rng) {
  for (;;) {
    Vector a(phi.size());
    for (Eigen::Index r = 0; r < a.size(); ++r) a[r] = rng.normal();
    const double s = (phi.phi * a).norm();
    if (s > 0.0) return a / s;
  }
}

void check_shapes(const DataMatrix& y, const FixedBasis& phi, const CoefficientMatrix& a) {
  if (y.dim() != phi.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "data dimension " + std::to_string(y.dim()) + " does not match basis dimension " +
                    std::to_string(phi.dim()));
  }
  if (a.rows() != phi.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "coefficient matrix has " + std::to_string(a.rows()) + " rows, basis has " +
                    std::to_string(phi.size()) + " columns");
  }
}

}  // namespace

CoefficientMatrix init_coefficients(const FixedBasis& phi, Eigen::Index k, RngStream& rng) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "atom count must be >= 1");
  CoefficientMatrix a(phi.size(), k);
  for (Eigen::Index j = 0; j < k; ++j) a.col(j) = random_atom(phi, rng);
  return a;
}

CodingResult sparse_coding_step(const DataMatrix& y, const FixedBasis& phi,
                                const CoefficientMatrix& a, const TrainConfig& cfg,
                                const OverlapOracle& oracle, int outer_iter) {
  check_shapes(y, phi, a);
  const Eigen::Index samples = y.samples();
  const Eigen::Index k = a.cols();
  const Matrix rows = effective_dictionary(phi, a).transpose();  // column r = row r of D
  const KaczmarzConfig kcfg = cfg.code_solver(y.dim());
  const Vector zero = Vector::Zero(k);

  CodingResult out{SparseCodeMatrix::Zero(k, samples), 0};
  std::vector<std::uint64_t> calls(static_cast<std::size_t>(samples), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(samples));

  auto work = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      try {
        RngStream rng(cfg.master_seed, streams::coding(outer_iter, samples, i));
        SolveResult r = solve_transposed(rows, y.values().col(i), kcfg, oracle, rng, zero);
        out.x.col(i) = r.x;
        calls[static_cast<std::size_t>(i)] = r.oracle_calls;
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };

  const auto workers = std::min<Eigen::Index>(cfg.threads, samples);
  if (workers <= 1) {
    work(0, samples);
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (samples + workers - 1) / workers;
    for (Eigen::Index begin = 0; begin < samples; begin += chunk) {
      pool.emplace_back(work, begin, std::min(samples, begin + chunk));
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.oracle_calls = std::accumulate(calls.begin(), calls.end(), std::uint64_t{0});
  return out;
}

void replace_dead_atom(const DataMatrix& y, const FixedBasis& phi, CoefficientMatrix& a,
                       SparseCodeMatrix& x, Eigen::Index j, DeadAtomPolicy policy,
                       RngStream& rng, std::vector<Eigen::Index>* taken) {
  x.row(j).setZero();
  if (policy == DeadAtomPolicy::ReplaceWorstSample) {
    const Vector residual_norms =
        (y.values() - phi.phi * (a * x)).colwise().norm().transpose();
    Eigen::Index worst = -1;
    for (Eigen::Index i = 0; i < residual_norms.size(); ++i) {
      if (taken && std::find(taken->begin(), taken->end(), i) != taken->end()) continue;
      if (worst < 0 || residual_norms[i] > residual_norms[worst]) worst = i;
    }
    if (worst >= 0) {
      // Phi has orthonormal columns, so Phi^T y is the minimum-norm solution.
      const Vector candidate = phi.phi.transpose() * y.values().col(worst);
      const double s = (phi.phi * candidate).norm();
      if (s > kDeadScale) {
        a.col(j) = candidate / s;
        if (taken) taken->push_back(worst);
        return;
      }
    }
  }
  a.col(j) = random_atom(phi, rng);
}

DictUpdateResult dictionary_update_step(const DataMatrix& y, const FixedBasis& phi,
                                        const CoefficientMatrix& a, const SparseCodeMatrix& x,
                                        const TrainConfig& cfg, const OverlapOracle& oracle,
                                        int outer_iter, const TrainObserver* observer) {
  check_shapes(y, phi, a);
  if (x.rows() != a.cols() || x.cols() != y.samples()) {
    throw Error(ErrorCode::DimensionMismatch, "code matrix shape does not match atoms x samples");
  }
  const Eigen::Index k = a.cols();
  const Eigen::Index samples = y.samples();
  const Matrix phi_rows = phi.phi.transpose();  // column r = row r of Phi
  const KaczmarzConfig kcfg = cfg.dict_solver(y.dim());
  const double use_threshold =
      cfg.atom_use_threshold.value_or(1e-6 * (x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0));

  DictUpdateResult out{a, x, 0, 0};
  std::vector<Eigen::Index> taken;

  auto replace = [&](Eigen::Index j) {
    RngStream rng(cfg.master_seed, streams::reinit(outer_iter, k, j));
    replace_dead_atom(y, phi, out.a, out.x, j, cfg.dead_atom_policy, rng, &taken);
    ++out.dead_replaced;
  };
  // Rescales atom j to unit norm, pushing the scale into its codes.
  // Returns false when the atom has collapsed.
  auto normalize = [&](Eigen::Index j) {
    const double s = (phi.phi * out.a.col(j)).norm();
    if (!(s > kDeadScale)) return false;
    if (observer && observer->before_rescale) observer->before_rescale(j, out.a, out.x);
    out.a.col(j) /= s;
    out.x.row(j) *= s;
    if (observer && observer->after_rescale) observer->after_rescale(j, out.a, out.x);
    return true;
  };

  std::vector<Eigen::Index> used;
  used.reserve(static_cast<std::size_t>(samples));
  for (Eigen::Index j = 0; j < k; ++j) {
    used.clear();
    for (Eigen::Index i = 0; i < samples; ++i) {
      if (std::abs(out.x(j, i)) > use_threshold) used.push_back(i);
    }
    if (used.empty()) {
      replace(j);
      continue;
    }

    // Rank-1 target for atom j from the residual restricted to its users,
    // computed against the atoms already updated in this sweep.
    const Matrix dict = phi.phi * out.a;
    const Matrix y_used = y.values()(Eigen::all, used);
    const Matrix x_used = out.x(Eigen::all, used);
    const Vector code_row = x_used.row(j).transpose();
    const Matrix residual = y_used - dict * x_used + dict.col(j) * code_row.transpose();
    const Vector target = residual * code_row / code_row.squaredNorm();

    RngStream rng(cfg.master_seed, streams::dict(outer_iter, k, j));
    SolveResult r = solve_transposed(phi_rows, target, kcfg, oracle, rng, out.a.col(j));
    out.a.col(j) = r.x;
    out.oracle_calls += r.oracle_calls;

    if (!normalize(j)) {
      replace(j);
      continue;
    }

    if (cfg.hard_threshold_s && *cfg.hard_threshold_s < out.a.rows()) {
      std::vector<Eigen::Index> order(static_cast<std::size_t>(out.a.rows()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index p, Eigen::Index q) {
        return std::abs(out.a(p, j)) > std::abs(out.a(q, j));
      });
      for (std::size_t r2 = static_cast<std::size_t>(*cfg.hard_threshold_s); r2 < order.size();
           ++r2) {
        out.a(order[r2], j) = 0.0;
      }
      if (!normalize(j)) replace(j);
    }
  }
  return out;
}

namespace {

TraceRow make_row(int iter, const DataMatrix& y, const FixedBasis& phi,
                  const CoefficientMatrix& a, const SparseCodeMatrix& x, std::uint64_t calls,
                  int dead) {
  TraceRow row;
  row.iter = iter;
  row.rel_error = relative_frobenius_error(y.values(), effective_dictionary(phi, a), x);
  row.code_sparsity = sparsity_fraction(x, kTraceSparsityTau);
  row.coef_sparsity = sparsity_fraction(a, kTraceSparsityTau);
  row.oracle_calls = calls;
  row.dead_atoms = dead;
  return row;
}

bool finite_row(const TraceRow& r) {
  return std::isfinite(r.rel_error) && std::isfinite(r.code_sparsity) &&
         std::isfinite(r.coef_sparsity);
}

}  // namespace

TrainResult train(const DataMatrix& y, const FixedBasis& phi, const TrainConfig& cfg,
                  const OverlapOracle& oracle, const TrainObserver* observer) {
  cfg.validate();
  if (y.dim() != phi.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "data dimension " + std::to_string(y.dim()) + " does not match basis dimension " +
                    std::to_string(phi.dim()));
  }

  TrainResult out;
  RngStream init_rng(cfg.master_seed, streams::kInitTag);
  out.a = init_coefficients(phi, cfg.atoms, init_rng);
  out.x = SparseCodeMatrix::Zero(cfg.atoms, y.samples());

  std::uint64_t calls = 0;
  try {
    auto record = [&](TraceRow row) {
      out.trace.push_back(row);
      if (observer && observer->on_iteration) observer->on_iteration(row, out.a, out.x);
      if (!finite_row(row) || !all_finite(out.a) || !all_finite(out.x)) {
        throw Error(ErrorCode::NumericalFailure,
                    "non-finite values at outer iteration " + std::to_string(row.iter));
      }
    };
    record(make_row(0, y, phi, out.a, out.x, 0, 0));
    for (int t = 0; t < cfg.outer_iters; ++t) {
      CodingResult coding = sparse_coding_step(y, phi, out.a, cfg, oracle, t);
      DictUpdateResult upd =
          dictionary_update_step(y, phi, out.a, coding.x, cfg, oracle, t, observer);
      calls += coding.oracle_calls + upd.oracle_calls;
      out.a = std::move(upd.a);
      out.x = std::move(upd.x);
      record(make_row(t + 1, y, phi, out.a, out.x, calls, upd.dead_replaced));
    }
  } catch (const Error& e) {
    throw TrainingError(e, out.trace);
  }
  return out;
}

TrainResult train(const DataMatrix& y, const FixedBasis& phi, const TrainConfig& cfg,
                  const OracleConfig& ocfg) {
  const QuantumOverlapOracle oracle(ocfg);
  return train(y, phi, cfg, oracle);
}

}  // namespace dsdl
