#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dsdl/bases.hpp"
#include "dsdl/data.hpp"
#include "dsdl/quantum_overlap.hpp"
#include "dsdl/trainer.hpp"

namespace dsdl {

/// Everything a CLI run needs. Built from strict JSON: every key must be one
/// of the documented ones, and `null` selects the derived default.
struct RunConfig {
  SyntheticSpec synth;
  OracleConfig oracle;
  TrainConfig train;

  std::filesystem::path data_in = "data";
  std::filesystem::path model_out = "model";
  std::filesystem::path trace_out;   // defaults to model_out/trace.csv
  std::filesystem::path report_out;  // defaults to model_out/report.json
  std::filesystem::path bench_out;   // defaults to model_out/bench.csv

  // Shot budgets for `bench`; nullopt is the exact oracle.
  std::vector<std::optional<std::int64_t>> bench_budgets;
};

struct ConfigKeyDoc {
  std::string key;
  std::string default_value;
  std::string description;
};

const std::vector<ConfigKeyDoc>& config_key_docs();

/// Formatted table of every key with its default, for --help.
std::string config_help();

nlohmann::json default_config_tree();

/// Merges user JSON over the defaults. Unknown keys and type mismatches throw
/// ConfigInvalid naming the offending key.
nlohmann::json merge_config(const nlohmann::json& user);

/// Applies `dotted.key=value`-style overrides; the value is parsed as JSON
/// and falls back to a plain string.
void apply_override(nlohmann::json& tree, std::string_view key, std::string_view value);

/// Validates a merged tree and converts it.
RunConfig build_run_config(const nlohmann::json& tree);

RunConfig parse_run_config(std::string_view json_text,
                           std::span<const std::string> overrides = {});

}  // namespace dsdl
