#include "dsdl/dsdl.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "dsdl/config.hpp"
#include "dsdl/data.hpp"
#include "dsdl/kaczmarz.hpp"
#include "dsdl/trainer.hpp"

using dsdl::Error;
using dsdl::ErrorCode;

struct dsdl_matrix {
  dsdl::Matrix m;
};

struct dsdl_config {
  nlohmann::json tree;
  dsdl::RunConfig run;
  std::string data_in, model_out, trace_out, report_out, bench_out;

  void rebuild() {
    run = dsdl::build_run_config(tree);
    data_in = run.data_in.string();
    model_out = run.model_out.string();
    trace_out = run.trace_out.string();
    report_out = run.report_out.string();
    bench_out = run.bench_out.string();
  }
};

struct dsdl_instance {
  dsdl_matrix y, phi, a_true, x_true;
};

struct dsdl_model {
  dsdl_matrix a, x;
  dsdl::TrainingTrace trace;
};

namespace {

thread_local std::string g_last_error;

dsdl_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return DSDL_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return DSDL_ERR_DIMENSION_MISMATCH;
    case ErrorCode::AllWeightsZero: return DSDL_ERR_ALL_WEIGHTS_ZERO;
    case ErrorCode::ZeroNormVector: return DSDL_ERR_ZERO_NORM_VECTOR;
    case ErrorCode::ZeroDataNorm: return DSDL_ERR_ZERO_DATA_NORM;
    case ErrorCode::RankDeficient: return DSDL_ERR_RANK_DEFICIENT;
    case ErrorCode::SpecInvalid: return DSDL_ERR_SPEC_INVALID;
    case ErrorCode::ConfigInvalid: return DSDL_ERR_CONFIG;
    case ErrorCode::IoError: return DSDL_ERR_IO;
    case ErrorCode::ParseError: return DSDL_ERR_PARSE;
    case ErrorCode::ShapeMismatch: return DSDL_ERR_SHAPE_MISMATCH;
    case ErrorCode::NumericalFailure: return DSDL_ERR_NUMERICAL;
  }
  return DSDL_ERR_INTERNAL;
}

dsdl_status fail(dsdl_status status, std::string msg) {
  g_last_error = std::move(msg);
  return status;
}

// Runs `body` translating every exception into a status code.
template <typename F>
dsdl_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return DSDL_OK;
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(DSDL_ERR_CONFIG, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DSDL_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DSDL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DSDL_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* dsdl_status_name(dsdl_status status) {
  switch (status) {
    case DSDL_OK: return "ok";
    case DSDL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DSDL_ERR_CONFIG: return "invalid configuration";
    case DSDL_ERR_IO: return "i/o error";
    case DSDL_ERR_PARSE: return "parse error";
    case DSDL_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case DSDL_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case DSDL_ERR_ALL_WEIGHTS_ZERO: return "all sampling weights zero";
    case DSDL_ERR_ZERO_NORM_VECTOR: return "zero-norm vector";
    case DSDL_ERR_ZERO_DATA_NORM: return "zero data norm";
    case DSDL_ERR_RANK_DEFICIENT: return "rank deficient";
    case DSDL_ERR_SPEC_INVALID: return "invalid synthetic spec";
    case DSDL_ERR_NUMERICAL: return "numerical failure";
    case DSDL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* dsdl_last_error(void) { return g_last_error.c_str(); }

const char* dsdl_version(void) { return "0.1.0"; }

void dsdl_string_free(char* s) { std::free(s); }

dsdl_status dsdl_matrix_create(size_t rows, size_t cols, const double* values,
                               dsdl_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    auto h = std::make_unique<dsdl_matrix>();
    const auto r = static_cast<Eigen::Index>(rows);
    const auto c = static_cast<Eigen::Index>(cols);
    h->m = values ? dsdl::Matrix(Eigen::Map<const dsdl::Matrix>(values, r, c))
                  : dsdl::Matrix::Zero(r, c);
    *out = h.release();
  });
}

dsdl_status dsdl_matrix_clone(const dsdl_matrix* m, dsdl_matrix** out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = new dsdl_matrix{m->m};
  });
}

void dsdl_matrix_free(dsdl_matrix* m) { delete m; }

size_t dsdl_matrix_rows(const dsdl_matrix* m) { return m ? static_cast<size_t>(m->m.rows()) : 0; }

size_t dsdl_matrix_cols(const dsdl_matrix* m) { return m ? static_cast<size_t>(m->m.cols()) : 0; }

const double* dsdl_matrix_data(const dsdl_matrix* m) { return m ? m->m.data() : nullptr; }

dsdl_status dsdl_matrix_load_csv(const char* path, dsdl_matrix** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new dsdl_matrix{dsdl::load_matrix(path)};
  });
}

dsdl_status dsdl_matrix_save_csv(const dsdl_matrix* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    dsdl::save_matrix(path, m->m);
  });
}

dsdl_status dsdl_config_create(dsdl_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    auto h = std::make_unique<dsdl_config>();
    h->tree = dsdl::default_config_tree();
    h->rebuild();
    *out = h.release();
  });
}

dsdl_status dsdl_config_from_json(const char* json_text, dsdl_config** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    auto user = nlohmann::json::parse(json_text, nullptr, false);
    if (user.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "config is not valid JSON");
    auto h = std::make_unique<dsdl_config>();
    h->tree = dsdl::merge_config(user);
    h->rebuild();
    *out = h.release();
  });
}

void dsdl_config_free(dsdl_config* cfg) { delete cfg; }

dsdl_status dsdl_config_set(dsdl_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "null argument");
    nlohmann::json tree = cfg->tree;
    dsdl::apply_override(tree, key, value);
    dsdl_config candidate{tree, {}, {}, {}, {}, {}, {}};
    candidate.rebuild();
    *cfg = std::move(candidate);
  });
}

dsdl_status dsdl_config_to_json(const dsdl_config* cfg, char** out_json) {
  return guarded([&] {
    require(cfg && out_json, "null argument");
    const std::string text = cfg->tree.dump(2);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

const char* dsdl_config_path(const dsdl_config* cfg, const char* which) {
  if (!cfg || !which) return nullptr;
  const std::string w = which;
  if (w == "data_in") return cfg->data_in.c_str();
  if (w == "model_out") return cfg->model_out.c_str();
  if (w == "trace_out") return cfg->trace_out.c_str();
  if (w == "report_out") return cfg->report_out.c_str();
  if (w == "bench_out") return cfg->bench_out.c_str();
  return nullptr;
}

size_t dsdl_config_bench_budget_count(const dsdl_config* cfg) {
  return cfg ? cfg->run.bench_budgets.size() : 0;
}

int64_t dsdl_config_bench_budget(const dsdl_config* cfg, size_t index) {
  if (!cfg || index >= cfg->run.bench_budgets.size()) return -1;
  return cfg->run.bench_budgets[index].value_or(0);
}

const char* dsdl_config_help(void) {
  static const std::string help = dsdl::config_help();
  return help.c_str();
}

dsdl_status dsdl_synthesize(const dsdl_config* cfg, dsdl_instance** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    dsdl::SyntheticInstance inst = dsdl::generate_synthetic(cfg->run.synth);
    *out = new dsdl_instance{{inst.y.values()}, {inst.phi.phi}, {inst.a_true}, {inst.x_true}};
  });
}

void dsdl_instance_free(dsdl_instance* inst) { delete inst; }

const dsdl_matrix* dsdl_instance_data(const dsdl_instance* inst) {
  return inst ? &inst->y : nullptr;
}
const dsdl_matrix* dsdl_instance_basis(const dsdl_instance* inst) {
  return inst ? &inst->phi : nullptr;
}
const dsdl_matrix* dsdl_instance_true_coefficients(const dsdl_instance* inst) {
  return inst ? &inst->a_true : nullptr;
}
const dsdl_matrix* dsdl_instance_true_codes(const dsdl_instance* inst) {
  return inst ? &inst->x_true : nullptr;
}

dsdl_status dsdl_instance_save(const dsdl_instance* inst, const char* dir) {
  return guarded([&] {
    require(inst && dir, "null argument");
    const std::filesystem::path d(dir);
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec || !std::filesystem::is_directory(d)) {
      throw Error(ErrorCode::IoError, "cannot create output directory '" + d.string() + "'");
    }
    dsdl::save_matrix(d / "Y.csv", inst->y.m);
    dsdl::save_matrix(d / "phi.csv", inst->phi.m);
    dsdl::save_matrix(d / "A_true.csv", inst->a_true.m);
    dsdl::save_matrix(d / "X_true.csv", inst->x_true.m);
  });
}

dsdl_status dsdl_train(const dsdl_config* cfg, const dsdl_matrix* data, const dsdl_matrix* basis,
                       dsdl_model** out) {
  return guarded([&] {
    require(cfg && data && basis && out, "null argument");
    *out = nullptr;
    const dsdl::DataMatrix y(data->m);
    const dsdl::FixedBasis phi = dsdl::basis_from_matrix(basis->m);
    const dsdl::QuantumOverlapOracle oracle(cfg->run.oracle);
    try {
      dsdl::TrainResult r = dsdl::train(y, phi, cfg->run.train, oracle);
      *out = new dsdl_model{{std::move(r.a)}, {std::move(r.x)}, std::move(r.trace)};
    } catch (const dsdl::TrainingError& e) {
      *out = new dsdl_model{{}, {}, e.trace()};
      throw;
    }
  });
}

void dsdl_model_free(dsdl_model* model) { delete model; }

const dsdl_matrix* dsdl_model_coefficients(const dsdl_model* model) {
  return model ? &model->a : nullptr;
}

const dsdl_matrix* dsdl_model_codes(const dsdl_model* model) {
  return model ? &model->x : nullptr;
}

size_t dsdl_model_trace_length(const dsdl_model* model) {
  return model ? model->trace.size() : 0;
}

dsdl_status dsdl_model_trace_row(const dsdl_model* model, size_t index, dsdl_trace_row* out) {
  return guarded([&] {
    require(model && out, "null argument");
    require(index < model->trace.size(), "trace index out of range");
    const dsdl::TraceRow& r = model->trace[index];
    *out = {r.iter, r.rel_error, r.code_sparsity, r.coef_sparsity, r.oracle_calls, r.dead_atoms};
  });
}

dsdl_status dsdl_model_save_trace(const dsdl_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    dsdl::save_trace(path, model->trace);
  });
}

dsdl_status dsdl_model_save_svg(const dsdl_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    dsdl::save_trace_svg(path, model->trace);
  });
}

dsdl_status dsdl_evaluate(const dsdl_matrix* data, const dsdl_matrix* basis,
                          const dsdl_matrix* coefficients, const dsdl_matrix* codes,
                          const dsdl_matrix* true_coefficients, dsdl_report* out) {
  return guarded([&] {
    require(data && basis && coefficients && codes && out, "null argument");
    const dsdl::Matrix& phi = basis->m;
    auto check = [](bool ok, const std::string& msg) {
      if (!ok) throw Error(ErrorCode::ShapeMismatch, msg);
    };
    check(phi.rows() == data->m.rows(), "basis rows do not match data rows");
    check(coefficients->m.rows() == phi.cols(), "A rows do not match basis columns");
    check(codes->m.rows() == coefficients->m.cols(), "X rows do not match atom count");
    check(codes->m.cols() == data->m.cols(), "X columns do not match sample count");
    dsdl_report report{};
    report.rel_error =
        dsdl::relative_frobenius_error(data->m, phi * coefficients->m, codes->m);
    report.code_sparsity = dsdl::sparsity_fraction(codes->m, dsdl::kTraceSparsityTau);
    report.coef_sparsity = dsdl::sparsity_fraction(coefficients->m, dsdl::kTraceSparsityTau);
    if (true_coefficients) {
      check(true_coefficients->m.rows() == phi.cols(), "A_true rows do not match basis columns");
      check(true_coefficients->m.cols() == coefficients->m.cols(),
            "A_true atom count does not match A");
      report.has_recovery = 1;
      report.recovery =
          dsdl::atom_recovery_score(phi * coefficients->m, phi * true_coefficients->m);
    }
    *out = report;
  });
}

dsdl_status dsdl_inner_product(const dsdl_config* cfg, const double* x, const double* y,
                               size_t dim, uint64_t seed, uint64_t stream_id, double* out) {
  return guarded([&] {
    require(cfg && x && y && out, "null argument");
    dsdl::RngStream rng(seed, stream_id);
    *out = dsdl::inner_product({x, dim}, {y, dim}, cfg->run.oracle, rng);
  });
}

dsdl_status dsdl_kaczmarz_solve(const dsdl_config* cfg, const dsdl_matrix* m, const double* y,
                                const double* x0, int32_t max_iters, uint64_t seed,
                                uint64_t stream_id, double* x_out, int32_t* iterations_out) {
  return guarded([&] {
    require(cfg && m && y && x_out, "null argument");
    require(max_iters >= 0, "max_iters must be >= 0");
    const dsdl::TrainConfig& t = cfg->run.train;
    dsdl::KaczmarzConfig kcfg{max_iters > 0 ? max_iters : static_cast<int>(2 * m->m.rows()),
                              t.ridge_lambda, t.row_sampling, t.residual_tolerance};
    const dsdl::Vector rhs = Eigen::Map<const dsdl::Vector>(y, m->m.rows());
    const dsdl::Vector start = x0 ? dsdl::Vector(Eigen::Map<const dsdl::Vector>(x0, m->m.cols()))
                                  : dsdl::Vector::Zero(m->m.cols());
    const dsdl::QuantumOverlapOracle oracle(cfg->run.oracle);
    dsdl::RngStream rng(seed, stream_id);
    const dsdl::SolveResult r = dsdl::solve(m->m, rhs, kcfg, oracle, rng, start);
    Eigen::Map<dsdl::Vector>(x_out, m->m.cols()) = r.x;
    if (iterations_out) *iterations_out = r.iterations;
  });
}

}  // extern "C"
