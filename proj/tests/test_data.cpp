#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dsdl/data.hpp"

using namespace dsdl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dsdl_data_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

ErrorCode load_error(const fs::path& p) {
  try {
    load_matrix(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected load_matrix to throw");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("generate_synthetic") {
  const SyntheticInstance inst = generate_synthetic(syn_a());
  CHECK(inst.y.values().rows() == 32);
  CHECK(inst.y.values().cols() == 400);
  CHECK(inst.a_true.rows() == 32);
  CHECK(inst.a_true.cols() == 48);
  CHECK(inst.x_true.rows() == 48);
  CHECK(relative_frobenius_error(inst.y.values(), inst.phi.phi * inst.a_true, inst.x_true) < 1e-10);
  for (Eigen::Index j = 0; j < 48; ++j) {
    CHECK((inst.a_true.col(j).array() != 0.0).count() == 6);
    CHECK(std::abs((inst.phi.phi * inst.a_true.col(j)).norm() - 1.0) < 1e-12);
  }
  for (Eigen::Index i = 0; i < 400; ++i) CHECK((inst.x_true.col(i).array() != 0.0).count() == 4);

  CHECK(generate_synthetic(syn_a()).y.values() == inst.y.values());

  SUBCASE("noise is added on top") {
    SyntheticSpec noisy = syn_a();
    noisy.noise_sigma = 0.1;
    const SyntheticInstance n = generate_synthetic(noisy);
    const double err = relative_frobenius_error(n.y.values(), n.phi.phi * n.a_true, n.x_true);
    CHECK(err > 0.01);
    CHECK(n.x_true == inst.x_true);
  }

  SUBCASE("invalid specs") {
    SyntheticSpec s = syn_a();
    s.s_code = 49;
    CHECK_THROWS_AS(generate_synthetic(s), Error);
    s = syn_a();
    s.m = 33;
    CHECK_THROWS_AS(generate_synthetic(s), Error);
    s = syn_a();
    s.noise_sigma = -1;
    CHECK_THROWS_AS(generate_synthetic(s), Error);
  }
}

TEST_CASE("generate_synthetic exact representation over random specs") {
  RngStream rng(100, 0);
  for (int t = 0; t < 100; ++t) {
    SyntheticSpec s;
    s.n = 1 + static_cast<Eigen::Index>(rng.below(12));
    s.m = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(s.n)));
    s.k = 1 + static_cast<Eigen::Index>(rng.below(10));
    s.samples = 1 + static_cast<Eigen::Index>(rng.below(20));
    s.s_code = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(s.k)));
    s.s_atom = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(s.m)));
    s.basis_kind = static_cast<BasisKind>(rng.below(3));
    s.seed = rng();
    s.basis_seed = rng();
    const SyntheticInstance inst = generate_synthetic(s);
    const Matrix recon = inst.phi.phi * inst.a_true * inst.x_true;
    CHECK((inst.y.values() - recon).norm() <= 1e-10 * std::max(1.0, inst.y.values().norm()));
  }
}

TEST_CASE("CSV matrix files") {
  const fs::path p = scratch("identity.csv");
  save_matrix(p, Matrix::Identity(2, 2));
  std::ifstream in(p);
  std::string l1, l2, l3, extra;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  CHECK(l1 == "2,2");
  CHECK(l2 == "1,0");
  CHECK(l3 == "0,1");
  CHECK_FALSE(std::getline(in, extra));
  CHECK(load_matrix(p) == Matrix::Identity(2, 2));

  SUBCASE("bitwise round trip including extremes") {
    RngStream rng(12, 0);
    Matrix m(7, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double mag = std::pow(10.0, -300.0 + 600.0 * rng.uniform());
      m.data()[i] = (rng.uniform() < 0.5 ? -1 : 1) * mag * (1 + rng.uniform());
    }
    m(0, 0) = 1e300;
    m(0, 1) = -1e300;
    m(0, 2) = 1e-300;
    m(0, 3) = -1e-300;
    m(0, 4) = std::numeric_limits<double>::max();
    const fs::path q = scratch("extreme.csv");
    save_matrix(q, m);
    const Matrix back = load_matrix(q);
    REQUIRE(back.rows() == 7);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      CHECK(std::memcmp(&back.data()[i], &m.data()[i], sizeof(double)) == 0);
    }
  }

  SUBCASE("errors") {
    write_text(scratch("rows.csv"), "2,2\n1,0\n0,1\n5,5\n");
    CHECK(load_error(scratch("rows.csv")) == ErrorCode::ShapeMismatch);
    write_text(scratch("cols.csv"), "2,2\n1,0\n0,1,3\n");
    CHECK(load_error(scratch("cols.csv")) == ErrorCode::ShapeMismatch);
    write_text(scratch("empty.csv"), "");
    try {
      load_matrix(scratch("empty.csv"));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    write_text(scratch("bad.csv"), "1,2\n1,abc\n");
    try {
      load_matrix(scratch("bad.csv"));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(load_error(scratch("missing-file.csv")) == ErrorCode::IoError);
    CHECK_THROWS_AS(save_matrix(scratch("no-such-dir") / "x.csv", Matrix::Ones(1, 1)), Error);
  }
}

TEST_CASE("trace files") {
  TrainingTrace t{{0, 1.0, 0.0, 1.0, 0, 0}, {1, 0.25, 0.5, 0.75, 123, 2}};
  const fs::path p = scratch("trace.csv");
  save_trace(p, t);
  std::ifstream in(p);
  std::string header, r0, r1;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  CHECK(header == "iter,rel_error,code_sparsity,coef_sparsity,oracle_calls,dead_atoms");
  CHECK(r0 == "0,1,0,1,0,0");
  CHECK(r1 == "1,0.25,0.5,0.75,123,2");

  const std::string svg = render_trace_svg(t);
  CHECK(svg.find("viewBox=\"0 0 800 400\"") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("sparsity_fraction") {
  CHECK(sparsity_fraction(Matrix::Identity(4, 4), 0.5) == 0.25);
  CHECK(sparsity_fraction(Matrix::Zero(3, 2), 0.5) == 0.0);
  CHECK(sparsity_fraction(Matrix::Ones(3, 2), 0.999) == 1.0);
  CHECK_THROWS_AS(sparsity_fraction(Matrix(0, 0), 0.5), Error);
  CHECK_THROWS_AS(sparsity_fraction(Matrix::Ones(1, 1), 1.0), Error);
}

TEST_CASE("atom_recovery_score") {
  RngStream rng(13, 0);
  Matrix d(6, 4);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = rng.normal();
  CHECK(atom_recovery_score(d, d) == doctest::Approx(1.0));

  Eigen::PermutationMatrix<Eigen::Dynamic> p(4);
  p.indices() << 2, 0, 3, 1;
  Matrix flipped = d * p;
  flipped.col(1) *= -3.0;
  flipped.col(2) *= -1.0;
  CHECK(atom_recovery_score(flipped, d) == doctest::Approx(1.0));
  const Matrix other = [&] {
    Matrix o(6, 4);
    for (Eigen::Index i = 0; i < o.size(); ++i) o.data()[i] = rng.normal();
    return o;
  }();
  const double base = atom_recovery_score(other, d);
  CHECK(atom_recovery_score(other * p, -d) == doctest::Approx(base).epsilon(1e-12));

  const Matrix truth = Matrix::Identity(4, 2);
  Matrix orthogonal = Matrix::Zero(4, 2);
  orthogonal(2, 0) = 1;
  orthogonal(3, 1) = 1;
  CHECK(atom_recovery_score(orthogonal, truth) == 0.0);
  CHECK_THROWS_AS(atom_recovery_score(Matrix::Ones(4, 3), truth), Error);
}
