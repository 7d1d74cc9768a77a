#include "dsdl/config.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dsdl {

using nlohmann::json;

namespace {

enum class KeyType { Int, NullableInt, Real, NullableReal, String, NullableString, BudgetList };

struct KeySpec {
  const char* section;
  const char* name;
  KeyType type;
  json default_value;
  const char* description;
};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"basis", "kind", KeyType::String, "dct", "fixed basis: identity | dct | random_orthonormal"},
      {"basis", "n", KeyType::Int, 32, "signal dimension (rows of Phi)"},
      {"basis", "m", KeyType::Int, 32, "basis size (columns of Phi), m <= n"},
      {"basis", "seed", KeyType::Int, 1, "seed for random_orthonormal bases"},
      {"synth", "k", KeyType::Int, 48, "number of true atoms"},
      {"synth", "samples", KeyType::Int, 400, "number of samples N"},
      {"synth", "s_code", KeyType::Int, 4, "nonzeros per true code column"},
      {"synth", "s_atom", KeyType::Int, 6, "nonzeros per true atom coefficient column"},
      {"synth", "noise_sigma", KeyType::Real, 0.0, "additive Gaussian noise std"},
      {"synth", "seed", KeyType::Int, 1, "instance seed"},
      {"oracle", "mode", KeyType::String, "exact", "inner-product oracle: exact | shot_noise"},
      {"oracle", "shots", KeyType::Int, 1024, "Hadamard-test repetitions in shot_noise mode"},
      {"oracle", "zero_norm_epsilon", KeyType::Real, 1e-12,
       "vectors at or below this norm contribute a zero inner product"},
      {"kaczmarz", "max_iters_code", KeyType::NullableInt, nullptr,
       "sparse-coding steps per sample (null: 2n)"},
      {"kaczmarz", "max_iters_dict", KeyType::NullableInt, nullptr,
       "dictionary-update steps per atom (null: 2n)"},
      {"kaczmarz", "ridge_lambda", KeyType::NullableReal, nullptr,
       "denominator regularizer (null: 1e-3 x mean squared row norm)"},
      {"kaczmarz", "row_sampling", KeyType::String, "squared_norm",
       "row selection: squared_norm | uniform"},
      {"kaczmarz", "residual_tolerance", KeyType::Real, 0.0,
       "early exit on relative residual, checked every len(y) steps (0: off)"},
      {"train", "outer_iters", KeyType::Int, 20, "alternating outer iterations"},
      {"train", "atoms", KeyType::NullableInt, nullptr, "atoms to learn (null: synth.k)"},
      {"train", "atom_use_threshold", KeyType::NullableReal, nullptr,
       "min |code| for a sample to use an atom (null: 1e-6 x max|X|)"},
      {"train", "dead_atom_policy", KeyType::String, "replace_worst_sample",
       "unused atoms: replace_worst_sample | reinit_random"},
      {"train", "hard_threshold_s", KeyType::NullableInt, nullptr,
       "keep only the s largest coefficients per atom (null: off)"},
      {"train", "seed", KeyType::Int, 1, "master seed for all training randomness"},
      {"train", "threads", KeyType::Int, 1, "sparse-coding workers (results do not depend on it)"},
      {"paths", "data_in", KeyType::String, "data",
       "instance directory (Y.csv, phi.csv, optional A_true.csv, X_true.csv)"},
      {"paths", "model_out", KeyType::String, "model", "directory for A.csv, X.csv and reports"},
      {"paths", "trace_out", KeyType::NullableString, nullptr,
       "trace CSV (null: <model_out>/trace.csv)"},
      {"paths", "report_out", KeyType::NullableString, nullptr,
       "eval report (null: <model_out>/report.json)"},
      {"paths", "bench_out", KeyType::NullableString, nullptr,
       "bench comparison CSV (null: <model_out>/bench.csv)"},
      {"bench", "budgets", KeyType::BudgetList, json::array({"exact", 256, 1024, 4096}),
       "shot budgets to compare; \"exact\" selects the exact oracle"},
  };
  return specs;
}

[[noreturn]] void fail(const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, msg);
}

bool is_integer(const json& v) {
  return v.is_number_integer() || v.is_number_unsigned();
}

void check_type(const std::string& key, KeyType type, const json& v) {
  const bool null_ok = type == KeyType::NullableInt || type == KeyType::NullableReal ||
                       type == KeyType::NullableString;
  if (v.is_null()) {
    if (!null_ok) fail(key + " must not be null");
    return;
  }
  switch (type) {
    case KeyType::Int:
    case KeyType::NullableInt:
      if (!is_integer(v)) fail(key + " must be an integer");
      return;
    case KeyType::Real:
    case KeyType::NullableReal:
      if (!v.is_number()) fail(key + " must be a number");
      return;
    case KeyType::String:
    case KeyType::NullableString:
      if (!v.is_string()) fail(key + " must be a string");
      return;
    case KeyType::BudgetList:
      if (!v.is_array()) fail(key + " must be an array");
      for (const auto& b : v) {
        if (!(b == "exact" || is_integer(b))) {
          fail(key + " entries must be \"exact\" or a positive integer");
        }
      }
      return;
  }
}

const KeySpec* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : key_specs()) {
    if (section == k.section && name == k.name) return &k;
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const auto& k : key_specs()) {
    if (section == k.section) return true;
  }
  return false;
}

std::string render(const json& v) {
  return v.dump();
}

}  // namespace

const std::vector<ConfigKeyDoc>& config_key_docs() {
  static const std::vector<ConfigKeyDoc> docs = [] {
    std::vector<ConfigKeyDoc> out;
    for (const auto& k : key_specs()) {
      out.push_back({std::string(k.section) + "." + k.name, render(k.default_value),
                     k.description});
    }
    return out;
  }();
  return docs;
}

std::string config_help() {
  std::size_t key_w = 0;
  std::size_t def_w = 0;
  for (const auto& d : config_key_docs()) {
    key_w = std::max(key_w, d.key.size());
    def_w = std::max(def_w, d.default_value.size());
  }
  std::ostringstream out;
  out << "Config keys (JSON file via --config, override with --set key=value):\n";
  for (const auto& d : config_key_docs()) {
    out << "  " << d.key << std::string(key_w - d.key.size() + 2, ' ') << d.default_value
        << std::string(def_w - d.default_value.size() + 2, ' ') << d.description << "\n";
  }
  return out.str();
}

json default_config_tree() {
  json tree = json::object();
  for (const auto& k : key_specs()) tree[k.section][k.name] = k.default_value;
  return tree;
}

json merge_config(const json& user) {
  if (!user.is_object()) fail("config must be a JSON object");
  json tree = default_config_tree();
  for (const auto& [section, body] : user.items()) {
    if (!known_section(section)) fail("unknown config section '" + section + "'");
    if (!body.is_object()) fail("config section '" + section + "' must be an object");
    for (const auto& [name, value] : body.items()) {
      const KeySpec* spec = find_key(section, name);
      const std::string key = section + "." + name;
      if (!spec) fail("unknown config key '" + key + "'");
      check_type(key, spec->type, value);
      tree[section][name] = value;
    }
  }
  return tree;
}

void apply_override(json& tree, std::string_view key, std::string_view value) {
  const std::string k(key);
  const auto dot = k.find('.');
  if (dot == std::string::npos) fail("override key '" + k + "' must be section.name");
  const std::string section = k.substr(0, dot);
  const std::string name = k.substr(dot + 1);
  const KeySpec* spec = find_key(section, name);
  if (!spec) fail("unknown config key '" + k + "'");
  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = std::string(value);
  check_type(k, spec->type, parsed);
  tree[section][name] = std::move(parsed);
}

namespace {

template <typename T>
T get_int(const json& tree, const char* section, const char* name, long long lo) {
  const json& v = tree.at(section).at(name);
  const std::string key = std::string(section) + "." + name;
  if (!is_integer(v)) fail(key + " must be an integer");
  if (v.is_number_unsigned()) {
    if (v.get<unsigned long long>() > static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
      fail(key + " is out of range");
    }
    return static_cast<T>(v.get<unsigned long long>());
  }
  const long long x = v.get<long long>();
  if (x < lo) fail(key + " must be >= " + std::to_string(lo));
  if (static_cast<unsigned long long>(x) > static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
    fail(key + " is out of range");
  }
  return static_cast<T>(x);
}

std::optional<int> get_opt_int(const json& tree, const char* section, const char* name,
                               long long lo) {
  if (tree.at(section).at(name).is_null()) return std::nullopt;
  return get_int<int>(tree, section, name, lo);
}

double get_real(const json& tree, const char* section, const char* name, double lo) {
  const double v = tree.at(section).at(name).get<double>();
  if (!std::isfinite(v) || v < lo) {
    fail(std::string(section) + "." + name + " must be finite and >= " + json(lo).dump());
  }
  return v;
}

std::optional<double> get_opt_real(const json& tree, const char* section, const char* name,
                                   double lo) {
  if (tree.at(section).at(name).is_null()) return std::nullopt;
  return get_real(tree, section, name, lo);
}

}  // namespace

RunConfig build_run_config(const json& tree) {
  RunConfig cfg;

  cfg.synth.basis_kind = parse_basis_kind(tree.at("basis").at("kind").get<std::string>());
  cfg.synth.n = get_int<Eigen::Index>(tree, "basis", "n", 1);
  cfg.synth.m = get_int<Eigen::Index>(tree, "basis", "m", 1);
  cfg.synth.basis_seed = get_int<std::uint64_t>(tree, "basis", "seed", 0);
  if (cfg.synth.m > cfg.synth.n) fail("basis.m must not exceed basis.n");
  cfg.synth.k = get_int<Eigen::Index>(tree, "synth", "k", 1);
  cfg.synth.samples = get_int<Eigen::Index>(tree, "synth", "samples", 1);
  cfg.synth.s_code = get_int<Eigen::Index>(tree, "synth", "s_code", 1);
  cfg.synth.s_atom = get_int<Eigen::Index>(tree, "synth", "s_atom", 1);
  cfg.synth.noise_sigma = get_real(tree, "synth", "noise_sigma", 0.0);
  cfg.synth.seed = get_int<std::uint64_t>(tree, "synth", "seed", 0);

  const std::string mode = tree.at("oracle").at("mode").get<std::string>();
  if (mode == "exact") {
    cfg.oracle.mode = OracleMode::Exact;
  } else if (mode == "shot_noise") {
    cfg.oracle.mode = OracleMode::ShotNoise;
  } else {
    fail("oracle.mode must be exact or shot_noise, got '" + mode + "'");
  }
  cfg.oracle.shots = get_int<std::int64_t>(tree, "oracle", "shots", 1);
  cfg.oracle.zero_norm_epsilon = get_real(tree, "oracle", "zero_norm_epsilon", 0.0);

  cfg.train.code_iters = get_opt_int(tree, "kaczmarz", "max_iters_code", 1);
  cfg.train.dict_iters = get_opt_int(tree, "kaczmarz", "max_iters_dict", 1);
  cfg.train.ridge_lambda = get_opt_real(tree, "kaczmarz", "ridge_lambda", 0.0);
  const std::string sampling = tree.at("kaczmarz").at("row_sampling").get<std::string>();
  if (sampling == "squared_norm") {
    cfg.train.row_sampling = RowSampling::SquaredNorm;
  } else if (sampling == "uniform") {
    cfg.train.row_sampling = RowSampling::Uniform;
  } else {
    fail("kaczmarz.row_sampling must be squared_norm or uniform, got '" + sampling + "'");
  }
  cfg.train.residual_tolerance = get_real(tree, "kaczmarz", "residual_tolerance", 0.0);

  cfg.train.outer_iters = get_int<int>(tree, "train", "outer_iters", 1);
  const auto atoms = get_opt_int(tree, "train", "atoms", 1);
  cfg.train.atoms = atoms ? *atoms : cfg.synth.k;
  cfg.train.atom_use_threshold = get_opt_real(tree, "train", "atom_use_threshold", 0.0);
  const std::string policy = tree.at("train").at("dead_atom_policy").get<std::string>();
  if (policy == "replace_worst_sample") {
    cfg.train.dead_atom_policy = DeadAtomPolicy::ReplaceWorstSample;
  } else if (policy == "reinit_random") {
    cfg.train.dead_atom_policy = DeadAtomPolicy::ReinitRandom;
  } else {
    fail("train.dead_atom_policy must be replace_worst_sample or reinit_random, got '" + policy +
         "'");
  }
  cfg.train.hard_threshold_s = get_opt_int(tree, "train", "hard_threshold_s", 1);
  cfg.train.master_seed = get_int<std::uint64_t>(tree, "train", "seed", 0);
  cfg.train.threads = get_int<int>(tree, "train", "threads", 1);

  const json& paths = tree.at("paths");
  cfg.data_in = paths.at("data_in").get<std::string>();
  cfg.model_out = paths.at("model_out").get<std::string>();
  auto path_or = [&](const char* name, const char* fallback) {
    const json& v = paths.at(name);
    return v.is_null() ? cfg.model_out / fallback : std::filesystem::path(v.get<std::string>());
  };
  cfg.trace_out = path_or("trace_out", "trace.csv");
  cfg.report_out = path_or("report_out", "report.json");
  cfg.bench_out = path_or("bench_out", "bench.csv");

  for (const auto& b : tree.at("bench").at("budgets")) {
    if (b == "exact") {
      cfg.bench_budgets.emplace_back(std::nullopt);
    } else {
      if (!is_integer(b) || (b.is_number_integer() && b.get<long long>() < 1)) {
        fail("bench.budgets entries must be \"exact\" or a positive integer");
      }
      cfg.bench_budgets.emplace_back(b.get<std::int64_t>());
    }
  }

  cfg.oracle.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig parse_run_config(std::string_view json_text, std::span<const std::string> overrides) {
  json user = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (user.is_discarded()) fail("config is not valid JSON");
  json tree = merge_config(user);
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) fail("override '" + o + "' must be key=value");
    apply_override(tree, std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
  }
  return build_run_config(tree);
}

}  // namespace dsdl
