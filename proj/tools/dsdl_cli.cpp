// Command-line front end over the C API: synth, train, eval, bench.
//
// Exit codes: 0 success, 2 usage/config/IO error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsdl/dsdl.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct ConfigFree {
  void operator()(dsdl_config* c) const { dsdl_config_free(c); }
};
struct MatrixFree {
  void operator()(dsdl_matrix* m) const { dsdl_matrix_free(m); }
};
struct InstanceFree {
  void operator()(dsdl_instance* i) const { dsdl_instance_free(i); }
};
struct ModelFree {
  void operator()(dsdl_model* m) const { dsdl_model_free(m); }
};
using ConfigPtr = std::unique_ptr<dsdl_config, ConfigFree>;
using MatrixPtr = std::unique_ptr<dsdl_matrix, MatrixFree>;
using InstancePtr = std::unique_ptr<dsdl_instance, InstanceFree>;
using ModelPtr = std::unique_ptr<dsdl_model, ModelFree>;

// Raised inside commands; carries the process exit code.
struct CommandError {
  int exit_code;
  std::string message;
};

[[noreturn]] void raise(dsdl_status st, const std::string& context) {
  const int code =
      (st == DSDL_ERR_NUMERICAL || st == DSDL_ERR_ALL_WEIGHTS_ZERO) ? kExitNumerical : kExitUsage;
  throw CommandError{code, context + ": " + dsdl_status_name(st) + ": " + dsdl_last_error()};
}

void check(dsdl_status st, const std::string& context) {
  if (st != DSDL_OK) raise(st, context);
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file (strict keys)");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set oracle.shots=4096")
      ->type_name("KEY=VALUE");
  cmd->add_option("--threads", opts.threads, "sparse-coding workers (overrides train.threads)");
  cmd->footer(dsdl_config_help());
}

ConfigPtr load_config(const CommonOptions& opts) {
  dsdl_config* raw = nullptr;
  if (opts.config_path.empty()) {
    check(dsdl_config_create(&raw), "config");
  } else {
    std::ifstream in(opts.config_path, std::ios::binary);
    if (!in) throw CommandError{kExitUsage, "cannot read config file '" + opts.config_path + "'"};
    std::stringstream text;
    text << in.rdbuf();
    check(dsdl_config_from_json(text.str().c_str(), &raw), "config '" + opts.config_path + "'");
  }
  ConfigPtr cfg(raw);
  for (const std::string& o : opts.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw CommandError{kExitUsage, "--set expects KEY=VALUE, got '" + o + "'"};
    }
    check(dsdl_config_set(cfg.get(), o.substr(0, eq).c_str(), o.substr(eq + 1).c_str()),
          "--set " + o);
  }
  if (opts.threads > 0) {
    check(dsdl_config_set(cfg.get(), "train.threads", std::to_string(opts.threads).c_str()),
          "--threads");
  }
  return cfg;
}

MatrixPtr load_matrix(const fs::path& path) {
  dsdl_matrix* raw = nullptr;
  check(dsdl_matrix_load_csv(path.string().c_str(), &raw), "loading '" + path.string() + "'");
  return MatrixPtr(raw);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  if (!dir.empty()) fs::create_directories(dir, ec);
  if (ec || (!dir.empty() && !fs::is_directory(dir))) {
    throw CommandError{kExitUsage, "cannot create directory '" + dir.string() + "'"};
  }
}

std::string shape(const dsdl_matrix* m) {
  return "(" + std::to_string(dsdl_matrix_rows(m)) + "," + std::to_string(dsdl_matrix_cols(m)) +
         ")";
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::vector<dsdl_trace_row> trace_of(const dsdl_model* model) {
  std::vector<dsdl_trace_row> rows(dsdl_model_trace_length(model));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    check(dsdl_model_trace_row(model, i, &rows[i]), "trace");
  }
  return rows;
}

int cmd_synth(const CommonOptions& opts) {
  ConfigPtr cfg = load_config(opts);
  dsdl_instance* raw = nullptr;
  check(dsdl_synthesize(cfg.get(), &raw), "synth");
  InstancePtr inst(raw);
  const char* dir = dsdl_config_path(cfg.get(), "data_in");
  check(dsdl_instance_save(inst.get(), dir), "synth");

  const nlohmann::json tree = [&] {
    char* text = nullptr;
    check(dsdl_config_to_json(cfg.get(), &text), "config");
    auto j = nlohmann::json::parse(text);
    dsdl_string_free(text);
    return j;
  }();
  std::cout << "wrote instance to " << dir << "\n"
            << "  Y      " << shape(dsdl_instance_data(inst.get())) << "\n"
            << "  phi    " << shape(dsdl_instance_basis(inst.get())) << "  basis "
            << tree["basis"]["kind"].get<std::string>() << "\n"
            << "  A_true " << shape(dsdl_instance_true_coefficients(inst.get())) << "\n"
            << "  X_true " << shape(dsdl_instance_true_codes(inst.get())) << "\n"
            << "  seed   " << tree["synth"]["seed"] << "\n";
  return kExitOk;
}

int cmd_train(const CommonOptions& opts, const std::string& svg_path) {
  ConfigPtr cfg = load_config(opts);
  const fs::path data_dir = dsdl_config_path(cfg.get(), "data_in");
  const fs::path model_dir = dsdl_config_path(cfg.get(), "model_out");
  const fs::path trace_path = dsdl_config_path(cfg.get(), "trace_out");
  MatrixPtr y = load_matrix(data_dir / "Y.csv");
  MatrixPtr phi = load_matrix(data_dir / "phi.csv");

  dsdl_model* raw = nullptr;
  const dsdl_status st = dsdl_train(cfg.get(), y.get(), phi.get(), &raw);
  ModelPtr model(raw);
  if (st != DSDL_OK) {
    const std::string message = dsdl_last_error();
    if (model) {
      ensure_dir(trace_path.parent_path());
      if (dsdl_model_save_trace(model.get(), trace_path.string().c_str()) == DSDL_OK) {
        std::cerr << "partial trace written to " << trace_path.string() << "\n";
      }
    }
    throw CommandError{
        (st == DSDL_ERR_NUMERICAL || st == DSDL_ERR_ALL_WEIGHTS_ZERO) ? kExitNumerical
                                                                      : kExitUsage,
        std::string("train: ") + dsdl_status_name(st) + ": " + message};
  }

  ensure_dir(model_dir);
  ensure_dir(trace_path.parent_path());
  check(dsdl_matrix_save_csv(dsdl_model_coefficients(model.get()),
                             (model_dir / "A.csv").string().c_str()),
        "train");
  check(dsdl_matrix_save_csv(dsdl_model_codes(model.get()), (model_dir / "X.csv").string().c_str()),
        "train");
  check(dsdl_model_save_trace(model.get(), trace_path.string().c_str()), "train");
  if (!svg_path.empty()) {
    ensure_dir(fs::path(svg_path).parent_path());
    check(dsdl_model_save_svg(model.get(), svg_path.c_str()), "train --svg");
  }

  const auto rows = trace_of(model.get());
  const dsdl_trace_row& last = rows.back();
  std::cout << "outer iterations     " << last.iter << "\n"
            << "initial rel. error   " << num(rows.front().rel_error) << "\n"
            << "final rel. error     " << num(last.rel_error) << "\n"
            << "code sparsity        " << num(last.code_sparsity) << "\n"
            << "coef sparsity        " << num(last.coef_sparsity) << "\n"
            << "oracle calls         " << last.oracle_calls << "\n"
            << "trace                " << trace_path.string() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonOptions& opts) {
  ConfigPtr cfg = load_config(opts);
  const fs::path data_dir = dsdl_config_path(cfg.get(), "data_in");
  const fs::path model_dir = dsdl_config_path(cfg.get(), "model_out");
  const fs::path report_path = dsdl_config_path(cfg.get(), "report_out");
  MatrixPtr y = load_matrix(data_dir / "Y.csv");
  MatrixPtr phi = load_matrix(data_dir / "phi.csv");
  MatrixPtr a = load_matrix(model_dir / "A.csv");
  MatrixPtr x = load_matrix(model_dir / "X.csv");
  MatrixPtr a_true;
  if (fs::exists(data_dir / "A_true.csv")) a_true = load_matrix(data_dir / "A_true.csv");

  dsdl_report report{};
  check(dsdl_evaluate(y.get(), phi.get(), a.get(), x.get(), a_true.get(), &report), "eval");

  nlohmann::ordered_json j;
  j["rel_error"] = report.rel_error;
  j["code_sparsity"] = report.code_sparsity;
  j["coef_sparsity"] = report.coef_sparsity;
  if (report.has_recovery) j["atom_recovery"] = report.recovery;
  ensure_dir(report_path.parent_path());
  std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
  if (!out) throw CommandError{kExitUsage, "cannot write '" + report_path.string() + "'"};
  out << j.dump(2) << "\n";

  std::cout << "rel. error      " << num(report.rel_error) << "\n"
            << "code sparsity   " << num(report.code_sparsity) << "\n"
            << "coef sparsity   " << num(report.coef_sparsity) << "\n";
  if (report.has_recovery) {
    std::cout << "atom recovery   " << num(report.recovery) << "\n";
  } else {
    std::cout << "atom recovery   (no A_true.csv)\n";
  }
  std::cout << "report          " << report_path.string() << "\n";
  return kExitOk;
}

int cmd_bench(const CommonOptions& opts) {
  ConfigPtr cfg = load_config(opts);
  const std::size_t budgets = dsdl_config_bench_budget_count(cfg.get());
  if (budgets == 0) throw CommandError{kExitUsage, "bench: bench.budgets is empty"};
  const fs::path data_dir = dsdl_config_path(cfg.get(), "data_in");
  const fs::path bench_path = dsdl_config_path(cfg.get(), "bench_out");
  MatrixPtr y = load_matrix(data_dir / "Y.csv");
  MatrixPtr phi = load_matrix(data_dir / "phi.csv");

  std::string csv = "budget,status,final_error,oracle_calls,wall_time_s\n";
  std::cout << std::left << std::setw(10) << "budget" << std::setw(10) << "status"
            << std::setw(24) << "final_error" << std::setw(14) << "oracle_calls"
            << "wall_time_s\n";
  for (std::size_t b = 0; b < budgets; ++b) {
    const std::int64_t shots = dsdl_config_bench_budget(cfg.get(), b);
    const std::string label = shots == 0 ? "exact" : std::to_string(shots);

    char* text = nullptr;
    check(dsdl_config_to_json(cfg.get(), &text), "bench");
    dsdl_config* run_raw = nullptr;
    const dsdl_status cst = dsdl_config_from_json(text, &run_raw);
    dsdl_string_free(text);
    check(cst, "bench");
    ConfigPtr run_cfg(run_raw);
    check(dsdl_config_set(run_cfg.get(), "oracle.mode", shots == 0 ? "exact" : "shot_noise"),
          "bench");
    if (shots > 0) {
      check(dsdl_config_set(run_cfg.get(), "oracle.shots", label.c_str()), "bench");
    }

    const auto start = std::chrono::steady_clock::now();
    dsdl_model* raw = nullptr;
    const dsdl_status st = dsdl_train(run_cfg.get(), y.get(), phi.get(), &raw);
    ModelPtr model(raw);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::string status = "ok";
    std::string error = "";
    std::string calls = "";
    if (st != DSDL_OK) {
      status = "failed";
      std::cerr << "bench: budget " << label << " failed: " << dsdl_last_error() << "\n";
    } else {
      const auto rows = trace_of(model.get());
      error = num(rows.back().rel_error);
      calls = std::to_string(rows.back().oracle_calls);
    }
    std::ostringstream wall_s;
    wall_s << std::fixed << std::setprecision(3) << wall;
    csv += label + "," + status + "," + error + "," + calls + "," + wall_s.str() + "\n";
    std::cout << std::left << std::setw(10) << label << std::setw(10) << status << std::setw(24)
              << error << std::setw(14) << calls << wall_s.str() << "\n";
  }

  ensure_dir(bench_path.parent_path());
  std::ofstream out(bench_path, std::ios::binary | std::ios::trunc);
  if (!out) throw CommandError{kExitUsage, "cannot write '" + bench_path.string() + "'"};
  out << csv;
  std::cout << "comparison written to " << bench_path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly sparse dictionary learning with randomized Kaczmarz projections and a "
               "simulated quantum overlap oracle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dsdl_version()));

  CommonOptions synth_opts, train_opts, eval_opts, bench_opts;
  std::string svg_path;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic ground-truth instance");
  add_common(synth, synth_opts);
  CLI::App* train = app.add_subcommand("train", "learn A and X from paths.data_in");
  add_common(train, train_opts);
  train->add_option("--svg", svg_path, "also write an SVG chart of the error trace");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a learned model against the data");
  add_common(eval, eval_opts);
  CLI::App* bench = app.add_subcommand("bench", "train once per shot budget and compare");
  add_common(bench, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_opts);
    if (*train) return cmd_train(train_opts, svg_path);
    if (*eval) return cmd_eval(eval_opts);
    if (*bench) return cmd_bench(bench_opts);
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  }
  return kExitUsage;
}
