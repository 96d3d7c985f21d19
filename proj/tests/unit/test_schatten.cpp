#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "semiclab/error.hpp"
#include "semiclab/schatten.hpp"

using namespace semiclab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CMatrix random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  return a;
}

CMatrix random_hermitian(std::mt19937_64& rng, int n) {
  const CMatrix a = random_matrix(rng, n);
  return 0.5 * (a + a.adjoint());
}

CMatrix random_psd(std::mt19937_64& rng, int n) {
  const CMatrix a = random_matrix(rng, n);
  return a * a.adjoint() / static_cast<double>(n);
}

CMatrix random_unitary(std::mt19937_64& rng, int n) {
  Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

CMatrix rank_one(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

}  // namespace

TEST_CASE("rank-one unit projector has unit trace norm at every hbar") {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
  v(2) = 1.0;
  for (double hbar : {0.3, 0.05}) {
    const SchattenReport r = schatten(rank_one(v), hbar, {1.0, 2.0, kInf});
    CHECK(r.semiclassical[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.schatten[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.trace == doctest::Approx(1.0));
    CHECK(r.op_norm == doctest::Approx(1.0));
    // The prefactor at p = inf is h^{-d}.
    CHECK(r.semiclassical[2] == doctest::Approx(1.0 / planck(hbar)).epsilon(1e-12));
  }
}

TEST_CASE("zero matrix has zero norms") {
  const SchattenReport r = schatten(CMatrix::Zero(5, 5), 0.1, {1.0, 1.5, 2.0, kInf});
  for (double v : r.schatten) CHECK(v == 0.0);
  for (double v : r.semiclassical) CHECK(v == 0.0);
  CHECK(r.op_norm == 0.0);
}

TEST_CASE("Schatten-2 equals the entrywise Frobenius sum") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix a = random_hermitian(rng, 4);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) sum += std::norm(a(i, j));
    CHECK(std::abs(schatten(a, 0.1, {2.0}).schatten[0] - std::sqrt(sum)) <= 1e-12 * std::sqrt(sum));
  }
}

TEST_CASE("report norms agree with the singular values") {
  std::mt19937_64 rng(12);
  const CMatrix a = random_matrix(rng, 12);
  const std::vector<double> ps{1.0, 1.5, 2.0, 3.0, 7.0, kInf};
  const SchattenReport r = schatten(a, 0.2, ps);
  for (std::size_t k = 1; k < r.singular_values.size(); ++k) CHECK(r.singular_values[k] <= r.singular_values[k - 1]);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    double direct = 0.0;
    if (std::isinf(ps[k])) direct = r.singular_values.front();
    else {
      for (double s : r.singular_values) direct += std::pow(s, ps[k]);
      direct = std::pow(direct, 1.0 / ps[k]);
    }
    CHECK(std::abs(r.schatten[k] - direct) <= 1e-10 * direct);
    CHECK(std::abs(r.semiclassical[k] - semiclassical_prefactor(0.2, ps[k]) * direct) <= 1e-10 * r.semiclassical[k]);
  }
}

TEST_CASE("raw Schatten norms are nonincreasing in p") {
  std::mt19937_64 rng(13);
  const std::vector<double> ps{1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, kInf};
  for (int trial = 0; trial < 20; ++trial) {
    const SchattenReport r = schatten(random_matrix(rng, 9), 0.1, ps);
    for (std::size_t k = 1; k < ps.size(); ++k) CHECK(r.schatten[k] <= r.schatten[k - 1]);
  }
}

TEST_CASE("semiclassical norms are log-convex in 1/p") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = random_psd(rng, 10);
    const double hbar = 0.05;
    const double p0 = 1.0, p1 = 4.0;
    for (double theta : {0.25, 0.5, 0.75}) {
      const double pt = 1.0 / ((1.0 - theta) / p0 + theta / p1);
      const double lhs = semiclassical_norm(a, hbar, pt);
      const double rhs = std::pow(semiclassical_norm(a, hbar, p0), 1.0 - theta) * std::pow(semiclassical_norm(a, hbar, p1), theta);
      CHECK(lhs <= rhs * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("Schatten norms are unitarily invariant") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix a = random_matrix(rng, 16);
    const CMatrix u = random_unitary(rng, 16);
    const CMatrix w = random_unitary(rng, 16);
    for (double p : {1.0, 2.0, 3.5, kInf}) {
      const double base = semiclassical_norm(a, 0.1, p);
      CHECK(std::abs(semiclassical_norm(u * a * w, 0.1, p) - base) <= 1e-10 * base);
    }
  }
}

TEST_CASE("trace norm duality is attained by the polar unitary") {
  std::mt19937_64 rng(16);
  const CMatrix a = random_matrix(rng, 10);
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix u = svd.matrixV() * svd.matrixU().adjoint();
  const double dual = std::abs((u * a).trace());
  CHECK(std::abs(dual - trace_norm(a)) <= 1e-10 * dual);
  for (int trial = 0; trial < 10; ++trial) CHECK(std::abs((random_unitary(rng, 10) * a).trace()) <= dual * (1.0 + 1e-10));
}

TEST_CASE("trace distance") {
  const Grid1D g(16, 4.0);
  std::mt19937_64 rng(17);
  const DensityOperator a(g, 0.1, random_psd(rng, 16));
  CHECK(trace_distance(a, a) == 0.0);

  Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(16), e2 = Eigen::VectorXcd::Zero(16);
  e1(0) = 1.0;
  e2(5) = 1.0;
  CHECK(trace_distance(DensityOperator(g, 0.1, rank_one(e1)), DensityOperator(g, 0.1, rank_one(e2))) == doctest::Approx(2.0).epsilon(1e-14));

  SUBCASE("triangle inequality, unitary invariance, diagonal lower bound") {
    for (int trial = 0; trial < 20; ++trial) {
      const DensityOperator x(g, 0.1, random_psd(rng, 16));
      const DensityOperator y(g, 0.1, random_psd(rng, 16));
      const DensityOperator z(g, 0.1, random_psd(rng, 16));
      CHECK(trace_distance(x, z) <= (trace_distance(x, y) + trace_distance(y, z)) * (1.0 + 1e-12));
      const CMatrix u = random_unitary(rng, 16);
      const double base = trace_distance(x, y);
      CHECK(std::abs(trace_distance(DensityOperator(g, 0.1, u * x.matrix * u.adjoint()), DensityOperator(g, 0.1, u * y.matrix * u.adjoint())) - base) <= 1e-10 * base);
      const std::vector<double> dx = x.density(), dy = y.density();
      double l1 = 0.0;
      for (std::size_t i = 0; i < dx.size(); ++i) l1 += std::abs(dx[i] - dy[i]) * g.spacing();
      CHECK(l1 <= base * (1.0 + 1e-12));
    }
  }

  SUBCASE("grid mismatch") {
    const DensityOperator other(Grid1D(16, 8.0), 0.1, a.matrix);
    CHECK_THROWS_AS(trace_distance(a, other), Error);
    try {
      trace_distance(a, DensityOperator(g, 0.2, a.matrix));
      FAIL("expected GRID_MISMATCH");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GridMismatch);
    }
  }
}

TEST_CASE("Hoelder oracle") {
  std::mt19937_64 rng(18);
  for (int n : {4, 8, 16}) {
    for (int trial = 0; trial < 30; ++trial) {
      const CMatrix a = random_matrix(rng, n), b = random_matrix(rng, n);
      const OracleSides cs = holder_oracle(a, b, 1.0, 2.0, 2.0);
      CHECK(cs.lhs <= cs.rhs * (1.0 + 1e-10));
      const OracleSides mixed = holder_oracle(a, b, 1.5, 2.0, 6.0);
      CHECK(mixed.lhs <= mixed.rhs * (1.0 + 1e-10));
      const OracleSides top = holder_oracle(a, b, 2.0, 2.0, kInf);
      CHECK(top.lhs <= top.rhs * (1.0 + 1e-10));
    }
  }
  const CMatrix id = 2.0 * CMatrix::Identity(6, 6);
  const OracleSides eq = holder_oracle(id, id, 1.0, 2.0, 2.0);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12));
  CHECK_THROWS_AS(holder_oracle(id, id, 1.0, 2.0, 3.0), Error);
}

TEST_CASE("Araki-Lieb-Thirring oracle") {
  std::mt19937_64 rng(19);
  for (int n : {4, 8, 16}) {
    for (int trial = 0; trial < 20; ++trial) {
      const CMatrix a = random_psd(rng, n), b = random_psd(rng, n);
      const OracleSides s = alt_oracle(a, b, 2.0, 1.0);
      CHECK(s.lhs <= s.rhs * (1.0 + 1e-10));
      const OracleSides quasi = alt_oracle(a, b, 1.5, 0.4);
      CHECK(quasi.lhs <= quasi.rhs * (1.0 + 1e-10));
      const OracleSides q1 = alt_oracle(a, b, 1.0, 1.5);
      CHECK(q1.lhs == doctest::Approx(q1.rhs).epsilon(1e-10));
    }
  }
  SUBCASE("commuting pair gives equality") {
    CMatrix a = CMatrix::Zero(5, 5), b = CMatrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
      a(i, i) = 0.3 + i;
      b(i, i) = 2.0 / (1 + i);
    }
    const OracleSides s = alt_oracle(a, b, 2.5, 1.3);
    CHECK(s.lhs == doctest::Approx(s.rhs).epsilon(1e-10));
  }
  SUBCASE("indefinite input") {
    CMatrix a = CMatrix::Identity(3, 3);
    a(1, 1) = -1.0;
    try {
      alt_oracle(a, CMatrix::Identity(3, 3), 2.0, 1.0);
      FAIL("expected NOT_PSD");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotPsd);
    }
  }
}

TEST_CASE("mixing oracle") {
  std::mt19937_64 rng(20);
  for (int n : {4, 8, 16}) {
    for (int trial = 0; trial < 20; ++trial) {
      const CMatrix a = random_psd(rng, n), b = random_psd(rng, n);
      const OracleSides s = mixing_oracle(a, b, 2.0, 1.0);
      CHECK(s.lhs <= s.rhs * (1.0 + 1e-10));
      const OracleSides r0 = mixing_oracle(a, b, 1.5, 0.0);
      CHECK(r0.lhs == doctest::Approx(r0.rhs).epsilon(1e-10));
      const OracleSides id = mixing_oracle(a, CMatrix::Identity(n, n), 3.0, 1.7);
      CHECK(id.lhs == doctest::Approx(id.rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("report JSON layout") {
  const SchattenReport r = schatten(CMatrix::Identity(3, 3), 0.5, {1.0, kInf});
  const nlohmann::json j = to_json(r);
  CHECK(j.size() == 5);
  CHECK(j["p"][1] == "inf");
  CHECK(j["trace"].get<double>() == doctest::Approx(3.0));
  CHECK(j["opnorm"].get<double>() == doctest::Approx(1.0));
  CHECK(j["schatten"].size() == 2);
  CHECK(j["semiclassical"].size() == 2);
}

TEST_CASE("dense eigensolver is exact at large sizes") {
  // Guards against BLAS kernels that corrupt the eigenvector back-transform at n >= 256.
  std::mt19937_64 rng(21);
  for (int n : {256, 512}) {
    const CMatrix h = random_hermitian(rng, n);
    const HermitianEigen e = eigh(h);
    const CMatrix id = CMatrix::Identity(n, n);
    CHECK((e.vectors.adjoint() * e.vectors - id).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint() - h).cwiseAbs().maxCoeff() <= 1e-11 * n);
    CHECK((eigvalsh(h) - e.values).cwiseAbs().maxCoeff() <= 1e-11 * n);
    const CMatrix a = random_matrix(rng, n), b = random_matrix(rng, n);
    const double scale = a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff() * n;
    CHECK((matmul(a, b) - a * b).cwiseAbs().maxCoeff() <= 1e-13 * scale);
    CHECK((matmul(a, b, true, true) - a.adjoint() * b.adjoint()).cwiseAbs().maxCoeff() <= 1e-13 * scale);
    Eigen::VectorXcd phase(n);
    for (int i = 0; i < n; ++i) phase[i] = std::polar(1.0, 0.1 * i);
    const CMatrix u = e.vectors * phase.asDiagonal() * e.vectors.adjoint();
    CHECK((spectral_conjugate(e, phase, a) - u * a * u.adjoint()).cwiseAbs().maxCoeff() <= 1e-11 * a.cwiseAbs().maxCoeff() * n);
    const Eigen::VectorXd s = singular_values(h);
    CHECK(std::abs(s.sum() - e.values.cwiseAbs().sum()) <= 1e-10 * s.sum());
  }
}
