#include "dsdl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dsdl {

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::SpecInvalid, msg); };
  if (n < 1 || m < 1 || k < 1 || samples < 1) fail("n, m, k and samples must all be >= 1");
  if (m > n) fail("basis size m must not exceed signal dimension n");
  if (s_code < 1 || s_code > k) fail("s_code must lie in [1, k]");
  if (s_atom < 1 || s_atom > m) fail("s_atom must lie in [1, m]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
}

SyntheticSpec syn_a() {
  return SyntheticSpec{};
}

SyntheticSpec syn_i() {
  SyntheticSpec s = syn_a();
  s.basis_kind = BasisKind::Identity;
  return s;
}

namespace {

// First `count` entries of a seeded Fisher-Yates shuffle of 0..size-1, sorted.
std::vector<Eigen::Index> random_support(Eigen::Index size, Eigen::Index count, RngStream& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto pick = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

SyntheticInstance generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  RngStream basis_rng(spec.basis_seed, 0);
  FixedBasis phi = make_basis(spec.basis_kind, spec.n, spec.m, basis_rng);

  RngStream atom_rng(spec.seed, 0);
  CoefficientMatrix a = CoefficientMatrix::Zero(spec.m, spec.k);
  for (Eigen::Index j = 0; j < spec.k; ++j) {
    for (;;) {
      Vector col = Vector::Zero(spec.m);
      for (Eigen::Index r : random_support(spec.m, spec.s_atom, atom_rng)) {
        col[r] = atom_rng.normal();
      }
      const double s = (phi.phi * col).norm();
      if (s > 0.0) {
        a.col(j) = col / s;
        break;
      }
    }
  }

  RngStream code_rng(spec.seed, 1);
  SparseCodeMatrix x = SparseCodeMatrix::Zero(spec.k, spec.samples);
  for (Eigen::Index i = 0; i < spec.samples; ++i) {
    for (Eigen::Index r : random_support(spec.k, spec.s_code, code_rng)) {
      double v = 0.0;
      while (v == 0.0) v = code_rng.normal();
      x(r, i) = v;
    }
  }

  Matrix y = phi.phi * (a * x);
  if (spec.noise_sigma > 0.0) {
    RngStream noise_rng(spec.seed, 2);
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
      for (Eigen::Index r = 0; r < y.rows(); ++r) y(r, i) += spec.noise_sigma * noise_rng.normal();
    }
  }
  return SyntheticInstance{DataMatrix(std::move(y)), std::move(phi), std::move(a), std::move(x),
                           spec};
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, end);
}

Error parse_error(std::size_t line, const std::string& msg) {
  return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_field(std::string_view field, T& value) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
}

}  // namespace

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::string text = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) text.push_back(',');
      append_number(text, m(r, c));
    }
    text.push_back('\n');
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw parse_error(1, "missing 'rows,cols' header");

  const auto header = split(lines[0]);
  long long rows = -1;
  long long cols = -1;
  if (header.size() != 2 || !parse_field(header[0], rows) || !parse_field(header[1], cols) ||
      rows < 0 || cols < 0) {
    throw parse_error(1, "header must be 'rows,cols'");
  }
  const auto body = static_cast<long long>(lines.size()) - 1;
  if (body != rows) {
    throw Error(ErrorCode::ShapeMismatch, "'" + path.string() + "' header declares " +
                                              std::to_string(rows) + " rows but has " +
                                              std::to_string(body));
  }

  Matrix m(rows, cols);
  for (long long r = 0; r < rows; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto fields = split(lines[static_cast<std::size_t>(r) + 1]);
    if (static_cast<long long>(fields.size()) != cols && !(cols == 0 && fields.size() == 1 &&
                                                           fields[0].empty())) {
      throw Error(ErrorCode::ShapeMismatch, "'" + path.string() + "' line " +
                                                std::to_string(line_no) + " has " +
                                                std::to_string(fields.size()) +
                                                " fields, header declares " + std::to_string(cols));
    }
    for (long long c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_field(fields[static_cast<std::size_t>(c)], v)) {
        throw parse_error(line_no, "invalid number '" +
                                       std::string(fields[static_cast<std::size_t>(c)]) + "'");
      }
      m(r, c) = v;
    }
  }
  return m;
}

void save_trace(const std::filesystem::path& path, const TrainingTrace& trace) {
  std::string text = "iter,rel_error,code_sparsity,coef_sparsity,oracle_calls,dead_atoms\n";
  for (const TraceRow& row : trace) {
    text += std::to_string(row.iter);
    text.push_back(',');
    append_number(text, row.rel_error);
    text.push_back(',');
    append_number(text, row.code_sparsity);
    text.push_back(',');
    append_number(text, row.coef_sparsity);
    text += "," + std::to_string(row.oracle_calls) + "," + std::to_string(row.dead_atoms) + "\n";
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

double sparsity_fraction(const Matrix& m, double tau_rel) {
  if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "sparsity of an empty matrix");
  if (!(tau_rel > 0.0 && tau_rel < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tau_rel must lie in (0, 1)");
  }
  const double peak = m.cwiseAbs().maxCoeff();
  if (peak == 0.0) return 0.0;
  const auto count = (m.array().abs() > tau_rel * peak).count();
  return static_cast<double>(count) / static_cast<double>(m.size());
}

double atom_recovery_score(const Matrix& learned, const Matrix& truth) {
  if (learned.rows() != truth.rows() || learned.cols() != truth.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "recovery needs equal shapes: learned " + std::to_string(learned.rows()) + "x" +
                    std::to_string(learned.cols()) + ", true " + std::to_string(truth.rows()) +
                    "x" + std::to_string(truth.cols()));
  }
  const Eigen::Index k = truth.cols();
  if (k == 0) return 0.0;
  auto normalized = [](const Matrix& d) {
    Matrix out = d;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double s = out.col(j).norm();
      if (s > 0.0) out.col(j) /= s;
    }
    return out;
  };
  Matrix similarity = (normalized(learned).transpose() * normalized(truth)).cwiseAbs();

  std::vector<bool> used_learned(static_cast<std::size_t>(k), false);
  std::vector<bool> used_true(static_cast<std::size_t>(k), false);
  double total = 0.0;
  for (Eigen::Index round = 0; round < k; ++round) {
    Eigen::Index bi = -1;
    Eigen::Index bj = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (used_learned[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (used_true[static_cast<std::size_t>(j)]) continue;
        if (similarity(i, j) > best) {
          best = similarity(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    used_learned[static_cast<std::size_t>(bi)] = true;
    used_true[static_cast<std::size_t>(bj)] = true;
    total += best;
  }
  return total / static_cast<double>(k);
}

}  // namespace dsdl
