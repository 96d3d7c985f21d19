#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "semiclab/error.hpp"
#include "semiclab/estimates.hpp"
#include "semiclab/schatten.hpp"

using namespace semiclab;

namespace {

constexpr double kPi = std::numbers::pi;

double gaussian(double x, double x0, double var) { return std::exp(-0.5 * (x - x0) * (x - x0) / var) / std::sqrt(2.0 * kPi * var); }

KernelSpec power_kernel(double a, double softening = -1.0) {
  KernelSpec k;
  k.a = a;
  k.softening = softening;
  return k;
}

KernelSpec off_kernel() {
  KernelSpec k;
  k.strength = 0.0;
  return k;
}

DensityOperator coherent(double hbar, std::size_t n = 128, double length = 8.0, double x0 = 0.0, double k0 = 0.0) {
  const Grid1D x(n, length);
  const PhaseSpaceGrid g(1, x, conjugate_grid(x, hbar));
  const double var = 0.5 * hbar;
  return weyl_quantize(
      PhaseSpaceField::sample(g, [&](const double* z) { return gaussian(z[0], x0, var) * gaussian(z[1], k0, var); }), hbar);
}

DensityOperator diagonal_state(double hbar, std::size_t n = 64) {
  DensityOperator rho{Grid1D(n, 8.0), hbar, CMatrix::Zero(n, n)};
  for (std::size_t i = 0; i < n; ++i) rho.matrix(i, i) = gaussian(rho.grid.point(i), 0.3, 0.5) * rho.grid.spacing();
  return rho;
}

DensityOperator scaled(const DensityOperator& rho, double c) {
  DensityOperator out = rho;
  out.matrix *= c;
  return out;
}

}  // namespace

TEST_CASE("gaussian superposition reproduces the kernel") {
  CHECK(omega_a(1.0, false) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(omega_a(2.0, false) == doctest::Approx(2.0 * kPi).epsilon(1e-14));
  CHECK(gaussian_superposition(0.0, true, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(gaussian_superposition(0.0, true, 1.0)) < 1e-12);

  for (double a : {0.25, 0.5, 1.0, 1.5}) {
    const double r = 0.37;
    const double ratio = gaussian_superposition(a, false, 2.0 * r) / gaussian_superposition(a, false, r);
    CHECK(std::abs(ratio - std::pow(2.0, -0.5 * a)) < 1e-10);
  }
  for (double a : {0.25, 0.5, 1.0, 1.5, -0.5}) {
    KernelSpec k = power_kernel(a, 0.0);
    k.d = a < 1.0 ? 1 : 2;
    const BoundCheck c = gaussian_decomposition_check(k, {0.05, 0.3, 1.0, 2.5, 7.0});
    CHECK(c.verdict);
    CHECK(c.details["max_relative_residual"].get<double>() <= 1e-6);
  }
  KernelSpec lg;
  lg.a = 0.0;
  lg.logarithmic = true;
  lg.softening = 0.1;
  const BoundCheck c = gaussian_decomposition_check(lg, {0.0, 0.5, 1.0, 3.0});
  CHECK(c.verdict);
  CHECK_THROWS_AS(gaussian_superposition(-3.0, false, 1.0), Error);
}

TEST_CASE("commutator exponents") {
  KernelSpec k = power_kernel(1.0);
  k.d = 3;
  const CommutatorExponents e = commutator_exponents(k);
  CHECK(e.b == doctest::Approx(1.5));
  CHECK(e.b_conjugate == doctest::Approx(3.0));
  CHECK_FALSE(e.proxy);
  CHECK(e.eps == doctest::Approx(1.0));
  CHECK(e.eps_tilde == doctest::Approx(1.0 / 12.0));

  const CommutatorExponents p = commutator_exponents(power_kernel(0.5));
  CHECK(p.proxy);
  CHECK(p.b == doctest::Approx(1.5));
  CHECK(p.b_conjugate == doctest::Approx(3.0));
  CHECK_THROWS_AS(commutator_exponents(power_kernel(0.5), 3.0), Error);
}

TEST_CASE("commutator trace bound") {
  const double hbar = 0.1;
  const KernelSpec k = power_kernel(0.5);

  SUBCASE("diagonal state commutes") {
    const DensityOperator rho = diagonal_state(hbar);
    const BoundCheck c = commutator_trace_check(rho, k, {-1.0, 0.0, 0.5});
    for (const auto& p : c.points) {
      CHECK(p.lhs < 1e-14);
      CHECK(p.ratio == 0.0);
    }
    CHECK(c.verdict);
  }
  SUBCASE("homogeneity") {
    const DensityOperator rho = coherent(hbar);
    const CommutatorExponents e = commutator_exponents(k);
    const CommutatorSides s1 = commutator_trace_sides(rho, k, 0.4, e);
    const CommutatorSides s2 = commutator_trace_sides(scaled(rho, 2.0), k, 0.4, e);
    CHECK(s2.lhs == doctest::Approx(2.0 * s1.lhs).epsilon(1e-10));
    CHECK(s2.rhs_shape == doctest::Approx(2.0 * s1.rhs_shape).epsilon(1e-10));
  }
  SUBCASE("translation covariance") {
    const DensityOperator rho = coherent(hbar, 128, 8.0, -0.5, 0.3);
    const CommutatorExponents e = commutator_exponents(k);
    const long cells = 12;
    DensityOperator moved = rho;
    moved.matrix = translate(rho.matrix, cells);
    const double shift = cells * rho.grid.spacing();
    for (double z : {-1.0, 0.0, 0.7}) {
      const double a = commutator_trace_sides(rho, k, z, e).lhs;
      const double b = commutator_trace_sides(moved, k, z + shift, e).lhs;
      CHECK(std::abs(a - b) <= 1e-10 * a);
    }
  }
  SUBCASE("bounded across z") {
    const DensityOperator rho = coherent(hbar);
    std::vector<double> zs;
    for (int i = 0; i < 8; ++i) zs.push_back(-1.5 + 3.0 * i / 7.0);
    const BoundCheck c = commutator_trace_check(rho, k, zs);
    CHECK(c.points.size() == 8);
    CHECK(c.verdict);
    CHECK(c.details["proxy_exponents"].get<bool>());
  }
}

TEST_CASE("commutator Lp bound") {
  const double hbar = 0.1;
  const KernelSpec k = power_kernel(0.5);
  CHECK_THROWS_AS(commutator_lp_sides(coherent(hbar), k, 0.0, 1.5), Error);
  CHECK_THROWS_AS(commutator_lp_sides(coherent(hbar), k, 0.0, 1.0, 1), Error);
  const BoundCheck d = commutator_lp_check(diagonal_state(hbar), k, {0.0, 1.0}, 1.0);
  for (const auto& p : d.points) CHECK(p.lhs < 1e-12);
  CHECK(d.details["q"].get<double>() == doctest::Approx(3.0));

  const DensityOperator rho = coherent(hbar);
  const CommutatorSides s1 = commutator_lp_sides(rho, k, 0.3, 1.0);
  const CommutatorSides s2 = commutator_lp_sides(scaled(rho, 2.0), k, 0.3, 1.0);
  CHECK(s2.lhs == doctest::Approx(2.0 * s1.lhs).epsilon(1e-10));
  CHECK(s2.rhs_shape == doctest::Approx(2.0 * s1.rhs_shape).epsilon(1e-10));
  CHECK(commutator_lp_check(rho, k, {-1.0, 0.0, 1.0}, 1.2).verdict);
}

TEST_CASE("kinetic interpolation") {
  const DensityOperator rho = coherent(0.1);
  const CommutatorSides collapse = kinetic_interpolation_sides(rho, 0);
  CHECK(collapse.lhs == doctest::Approx(collapse.rhs_shape).epsilon(1e-10));
  CHECK(collapse.lhs == doctest::Approx(trace_norm(quantum_grad_xi(rho))).epsilon(1e-10));

  const CommutatorSides s1 = kinetic_interpolation_sides(rho, 2);
  const CommutatorSides s2 = kinetic_interpolation_sides(scaled(rho, 2.0), 2);
  CHECK(s2.lhs == doctest::Approx(2.0 * s1.lhs).epsilon(1e-10));
  CHECK(s2.rhs_shape == doctest::Approx(2.0 * s1.rhs_shape).epsilon(1e-10));
  CHECK_THROWS_AS(kinetic_interpolation_sides(rho, 1), Error);
  CHECK(kinetic_interpolation_check(rho, 2).points.front().ratio > 0.0);
}

TEST_CASE("weighted Weyl bounds") {
  const double hbar = 0.1;
  LadderSpec ladder;
  const Grid1D x = ladder_grid(hbar, ladder);
  CHECK(x.n_points == 256);
  CHECK(grid_size_for(0.025, ladder) == 512);
  const Symbol g = [](double xx, double k) { return gaussian(xx, 0.2, 0.3) * gaussian(k, -0.1, 0.1); };

  SUBCASE("zero symbol") {
    const WeylBoundReport r = weighted_weyl_sides(sample_symbol([](double, double) { return 0.0; }, x, hbar), hbar, 2, 2);
    for (const auto& s : r.sides) {
      CHECK(s.lhs == 0.0);
      CHECK(s.rhs_shape == 0.0);
    }
  }
  SUBCASE("prefactors and the symbol route") {
    const WeylBoundReport r = weighted_weyl_sides(sample_symbol(g, x, hbar), hbar, 2, 0);
    CHECK(r.prefactor_p == 16.0);
    REQUIRE(r.sides.front().name == "weyl_vs_p");
    CHECK(std::abs(r.sides.front().lhs - r.symbol_route_p) <= 1e-6 * r.symbol_route_p);
    CHECK(r.sides.size() == 5);
    // Explicit prefactors make these two inequalities literal.
    CHECK(r.sides[0].lhs <= r.sides[0].rhs_shape);
    CHECK(r.sides[1].lhs <= r.sides[1].rhs_shape);
  }
  SUBCASE("n = 0 collapses to the isometry") {
    const PhaseSpaceField f = sample_symbol(g, x, hbar);
    const WeylBoundReport r = weighted_weyl_sides(f, hbar, 0, 0);
    CHECK(r.sides[0].lhs == doctest::Approx(lebesgue_norm(f.values, f.grid.cell_volume(), 2.0)).epsilon(1e-8));
  }
  SUBCASE("ladder") {
    LadderSpec small;
    small.hbar = {0.2, 0.1, 0.05};
    const auto checks = weighted_weyl_bound_check(g, small, 2, 2);
    CHECK(checks.size() == 5);
    for (const auto& c : checks) {
      CHECK(c.points.size() == 3);
      CHECK(c.verdict);
    }
  }
}

TEST_CASE("exchange bound") {
  const double hbar = 0.1;
  const DensityOperator rho = coherent(hbar);
  CHECK(exchange_sides(rho, off_kernel()).trace == 0.0);

  const ExchangeSides s = exchange_sides(rho, power_kernel(0.5));
  CHECK(s.trace > 0.0);
  CHECK(s.weighted_l2 <= s.energy_bound * (1.0 + 1e-10));
  const ExchangeSides neg = exchange_sides(rho, power_kernel(-0.5));
  CHECK(neg.trace > 0.0);
  CHECK(neg.weighted_l2 <= neg.energy_bound * (1.0 + 1e-10));
  KernelSpec lg;
  lg.a = 0.0;
  lg.logarithmic = true;
  lg.softening = 0.2;
  CHECK_THROWS_AS(exchange_sides(rho, lg), Error);

  SUBCASE("controlling inequality on random states") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    const Grid1D x(32, 8.0);
    for (int trial = 0; trial < 50; ++trial) {
      CMatrix a(32, 32);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = Complex(normal(rng), normal(rng));
      DensityOperator r{x, hbar, a * a.adjoint()};
      r.matrix /= r.trace();
      for (double exponent : {0.5, 0.9}) {
        const ExchangeSides e = exchange_sides(r, power_kernel(exponent));
        CHECK(e.weighted_l2 <= e.energy_bound * (1.0 + 1e-10) + 1e-10);
      }
    }
  }
}

TEST_CASE("classical stability") {
  const Grid1D x(64, 8.0);
  const Grid1D xi(64, 8.0);
  const PhaseSpaceGrid g(1, x, xi);
  const auto field = [&](double x0, double amp) {
    return PhaseSpaceField::sample(g, [&](const double* z) {
      return gaussian(z[0], x0, 0.4) * gaussian(z[1], 0.0, 0.4) * (1.0 + amp * std::cos(z[0]));
    });
  };
  const auto scaled_field = [](PhaseSpaceField f, double c) {
    for (double& v : f.values) v *= c;
    return f;
  };
  StabilityOptions opt;
  opt.t_final = 0.5;
  opt.dt = 1e-2;
  opt.record_every = 5;

  SUBCASE("identical data") {
    const PhaseSpaceField f = field(0.0, 0.0);
    const BoundCheck c = classical_stability_check(f, f, power_kernel(0.5), opt);
    for (const auto& p : c.points) CHECK(p.lhs <= 1e-12);
    CHECK(c.verdict);
  }
  SUBCASE("free transport keeps the distance") {
    const BoundCheck c = classical_stability_check(field(0.0, 0.1), scaled_field(field(0.0, 0.1), 1.1), off_kernel(), opt);
    const double d0 = c.points.front().lhs;
    for (const auto& p : c.points) CHECK(std::abs(p.lhs - d0) <= 1e-8 * std::max(1.0, d0));
    CHECK(c.verdict);
  }
  SUBCASE("perturbed pair respects the envelope") {
    const BoundCheck c = classical_stability_check(field(0.0, 0.0), field(0.0, 0.05), power_kernel(0.5), opt);
    CHECK(c.verdict);
    CHECK(c.fitted_c > 0.0);
    CHECK(c.details["sharp_envelope"].size() == c.points.size());
  }
}

TEST_CASE("rate fit") {
  const std::vector<double> h{0.2, 0.1, 0.05, 0.025};
  std::vector<double> e1, e2, e3;
  for (double v : h) {
    e1.push_back(3.0 * v);
    e2.push_back(0.5 * v * v);
    e3.push_back(2.0 * std::pow(v, 0.75));
  }
  CHECK(std::abs(rate_fit(h, e1).slope - 1.0) < 1e-6);
  CHECK(std::abs(rate_fit(h, e2).slope - 2.0) < 1e-6);
  CHECK(std::abs(rate_fit(h, e3).slope - 0.75) < 1e-6);
  CHECK(rate_fit(h, e1).r2 == doctest::Approx(1.0));
  CHECK(rate_fit(h, e1).intercept == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(rate_fit({0.1, 0.2}, {1.0, 2.0}), Error);
  try {
    rate_fit(h, {1.0, 0.0, 1.0, 1.0});
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NonpositiveError);
  }
}

TEST_CASE("bound check JSON") {
  BoundCheck c;
  c.name = "demo";
  c.axis = "hbar";
  c.points = {{0.2, 1.0, 2.0, 0.0}, {0.1, 0.5, 1.5, 0.0}, {0.05, 0.0, 1.0, 0.0}};
  finalize_ratio_check(c);
  CHECK(c.points[2].ratio == 0.0);
  CHECK(c.fitted_c == doctest::Approx(0.5));
  CHECK(c.spread == doctest::Approx(1.5));
  const nlohmann::json j = to_json(c);
  for (const char* key : {"name", "axis", "points", "fitted_C", "verdict"}) CHECK(j.contains(key));
  const BoundCheck back = bound_check_from_json(j);
  CHECK(back.points.size() == 3);
  CHECK(back.points[1].ratio == c.points[1].ratio);
  CHECK(back.fitted_c == c.fitted_c);
}
