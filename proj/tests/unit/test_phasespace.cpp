#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include "semiclab/error.hpp"
#include "semiclab/io.hpp"
#include "semiclab/phasespace.hpp"

using namespace semiclab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gauss2(double x, double k, double vx, double vk) {
  return std::exp(-0.5 * x * x / vx - 0.5 * k * k / vk) / (2.0 * std::numbers::pi * std::sqrt(vx * vk));
}

PhaseSpaceField gaussian_field(std::size_t n, double lx, double lk, double vx, double vk) {
  PhaseSpaceGrid g(1, Grid1D(n, lx), Grid1D(n, lk));
  return PhaseSpaceField::sample(g, [&](const double* z) { return gauss2(z[0], z[1], vx, vk); });
}

}  // namespace

TEST_CASE("grid invariants") {
  Grid1D g(64, 8.0);
  CHECK(g.spacing() * 64 == doctest::Approx(8.0));
  CHECK(g.point(0) == doctest::Approx(-4.0));
  CHECK(g.point(32) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(Grid1D(48, 1.0), Error);
  CHECK(std::abs(g.wavenumber(32)) == doctest::Approx(g.nyquist()));
}

TEST_CASE("spatial density") {
  SUBCASE("zero field") {
    PhaseSpaceField f(PhaseSpaceGrid(1, Grid1D(32, 8.0), Grid1D(32, 8.0)));
    for (double v : spatial_density(f)) CHECK(v == 0.0);
  }
  SUBCASE("gaussian peak against refined quadrature") {
    const double vx = 0.5, vk = 0.7;
    auto f = gaussian_field(64, 12.0, 12.0, vx, vk);
    const auto rho = spatial_density(f);
    // Oracle: 4x refined momentum quadrature of the same closed form at x = 0.
    const std::size_t nf = 256;
    const double dk = 12.0 / nf;
    double peak = 0.0;
    for (std::size_t k = 0; k < nf; ++k) peak += gauss2(0.0, -6.0 + k * dk, vx, vk) * dk;
    CHECK(std::abs(rho[32] - peak) / peak < 1e-6);
    double mass = 0.0;
    for (double r : rho) mass += r * f.grid.x.spacing();
    CHECK(mass == doctest::Approx(f.mass()).epsilon(1e-13));
  }
  SUBCASE("separable scaling") {
    PhaseSpaceGrid g(1, Grid1D(32, 8.0), Grid1D(32, 6.0));
    const double dk = g.xi.spacing();
    double hsum = 0.0;
    for (std::size_t k = 0; k < 32; ++k) hsum += std::exp(-g.xi.point(k) * g.xi.point(k)) * dk;
    auto f = PhaseSpaceField::sample(g, [&](const double* z) { return std::cos(z[0]) * 2.0 * std::exp(-z[1] * z[1]) / hsum; });
    const auto rho = spatial_density(f);
    for (std::size_t i = 0; i < 32; ++i) CHECK(rho[i] == doctest::Approx(2.0 * std::cos(g.x.point(i))).epsilon(1e-13));
  }
  SUBCASE("commutes with nonnegative scaling") {
    auto f = gaussian_field(32, 10.0, 10.0, 1.0, 1.0);
    const auto a = spatial_density(f);
    for (double c : {2.0, 0.5, 0.0}) {
      auto g = f;
      for (auto& v : g.values) v *= c;
      const auto b = spatial_density(g);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == c * a[i]);
    }
    auto g = f;
    for (auto& v : g.values) v *= 3.0;
    const auto b = spatial_density(g);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(3.0 * a[i]).epsilon(1e-15));
  }
}

TEST_CASE("weighted sobolev norm") {
  SUBCASE("zero field") {
    PhaseSpaceField f(PhaseSpaceGrid(1, Grid1D(32, 8.0), Grid1D(32, 8.0)));
    for (int s : {0, 1, 2})
      for (double k : {0.0, 1.0}) CHECK(weighted_sobolev_norm(f, {s, k, 2.0}) == 0.0);
  }
  SUBCASE("unit gaussian L2 closed form") {
    auto f = gaussian_field(128, 24.0, 24.0, 1.0, 1.0);
    CHECK(std::abs(weighted_sobolev_norm(f, {0, 0.0, 2.0}) - 1.0 / std::sqrt(4.0 * std::numbers::pi)) < 1e-8);
  }
  SUBCASE("first derivative against analytic gradient") {
    const double L = 8.0;
    PhaseSpaceGrid g(1, Grid1D(64, L), Grid1D(64, 12.0));
    const double w = 2.0 * std::numbers::pi / L;
    auto f = PhaseSpaceField::sample(g, [&](const double* z) { return std::sin(w * z[0]) * std::exp(-z[1] * z[1]); });
    double base = 0.0, grad = 0.0;
    const double cell = g.cell_volume();
    for (std::size_t i = 0; i < 64; ++i)
      for (std::size_t k = 0; k < 64; ++k) {
        const double x = g.x.point(i), p = g.xi.point(k);
        const double v = std::sin(w * x) * std::exp(-p * p);
        const double dx = w * std::cos(w * x) * std::exp(-p * p);
        const double dp = -2.0 * p * std::sin(w * x) * std::exp(-p * p);
        base += v * v * cell;
        grad += (dx * dx + dp * dp) * cell;
      }
    const double expect = std::sqrt(base) + std::sqrt(grad);
    CHECK(weighted_sobolev_norm(f, {1, 0.0, 2.0}) == doctest::Approx(expect).epsilon(1e-10));
  }
  SUBCASE("monotone in weight and order, bounded below by L^p") {
    // Spectral mass at |k| >= 1 so the literal norm grows with sigma.
    auto f = gaussian_field(128, 12.0, 12.0, 0.05, 0.05);
    for (double p : {1.0, 2.0, kInf}) {
      double prev = 0.0;
      for (int s = 0; s <= 3; ++s) {
        const double v = weighted_sobolev_norm(f, {s, 0.0, p});
        CHECK(v >= prev * (1.0 - 1e-12));
        CHECK(v >= lebesgue_norm(f.values, f.grid.cell_volume(), p) * (1.0 - 1e-12));
        prev = v;
      }
      double prevk = 0.0;
      for (double k : {0.0, 0.5, 1.0, 2.0}) {
        const double v = weighted_sobolev_norm(f, {1, k, p});
        CHECK(v >= prevk);
        prevk = v;
      }
    }
  }
  SUBCASE("refinement consistency") {
    auto a = gaussian_field(64, 16.0, 16.0, 1.0, 1.0);
    auto b = gaussian_field(128, 16.0, 16.0, 1.0, 1.0);
    // |grad f| has a conical zero at the peak, so its L^1 quadrature converges only algebraically.
    const std::pair<int, double> cases[] = {{0, 1.0}, {0, 2.0}, {1, 2.0}, {2, 1.0}, {2, 2.0}, {3, 2.0}};
    for (auto [s, p] : cases) {
      const double va = weighted_sobolev_norm(a, {s, 1.0, p});
      const double vb = weighted_sobolev_norm(b, {s, 1.0, p});
      CHECK(std::abs(va - vb) / vb < 1e-6);
    }
  }
  SUBCASE("unresolved field is rejected") {
    PhaseSpaceGrid g(1, Grid1D(32, 8.0), Grid1D(32, 8.0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    PhaseSpaceField f(g);
    for (auto& v : f.values) v = nd(rng);
    try {
      weighted_sobolev_norm(f, {1, 0.0, 2.0});
      FAIL("expected RESOLUTION_ERROR");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Resolution);
    }
    CHECK_NOTHROW(weighted_sobolev_norm(f, {0, 0.0, 2.0}));
  }
}

TEST_CASE("lorentz norm") {
  SUBCASE("indicator gives m^{1/p} for every q") {
    const double cell = 0.25;
    std::vector<double> g(40, 0.0);
    for (int i = 5; i < 17; ++i) g[i] = 1.0;
    const double m = 12 * cell;
    for (double p : {1.0, 1.5, 3.0})
      for (double q : {1.0, 2.0, 7.0, kInf}) CHECK(lorentz_norm(g, cell, p, q) == doctest::Approx(std::pow(m, 1.0 / p)).epsilon(1e-12));
  }
  SUBCASE("q = p coincides with L^p") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> g(100);
      for (auto& v : g) v = u(rng);
      for (double p : {1.0, 2.0, 3.5}) {
        const double a = lorentz_norm(g, 0.1, p, p);
        const double b = lebesgue_norm(g, 0.1, p);
        CHECK(std::abs(a - b) / b < 1e-10);
      }
    }
  }
  SUBCASE("nonincreasing in q") {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> ex(1.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> g(64);
      for (auto& v : g) v = ex(rng);
      for (double p : {1.0, 2.0, 4.0}) {
        double prev = kInf;
        for (double q : {1.0, 1.5, 2.0, 4.0, 10.0, kInf}) {
          const double v = lorentz_norm(g, 0.05, p, q);
          CHECK(v <= prev * (1.0 + 1e-12));
          prev = v;
        }
      }
    }
  }
  SUBCASE("weak L1 of 1/|x| is resolution independent") {
    auto sample = [](std::size_t n) {
      Grid1D g(n, 8.0);
      std::vector<double> v;
      for (std::size_t i = 0; i < n; ++i)
        if (i != n / 2) v.push_back(1.0 / std::abs(g.point(i)));
      return std::make_pair(v, g.spacing());
    };
    auto [a, ha] = sample(256);
    auto [b, hb] = sample(512);
    const double wa = lorentz_norm(a, ha, 1.0, kInf);
    const double wb = lorentz_norm(b, hb, 1.0, kInf);
    CHECK(std::abs(wa - wb) / wa < 0.05);
    const double la = lebesgue_norm(a, ha, 1.0);
    const double lb = lebesgue_norm(b, hb, 1.0);
    CHECK(lb - la == doctest::Approx(2.0 * std::log(2.0)).epsilon(0.02));
  }
}

TEST_CASE("phase norms") {
  PhaseSpaceGrid g(1, Grid1D(16, 4.0), Grid1D(16, 3.0));
  PhaseSpaceField c(g);
  for (auto& v : c.values) v = 1.5;
  const auto n = phase_norms(c, {1.0, 2.0, 3.0, kInf});
  for (double p : {1.0, 2.0, 3.0}) CHECK(n.at(p) == doctest::Approx(1.5 * std::pow(12.0, 1.0 / p)).epsilon(1e-13));
  CHECK(n.at(kInf) == 1.5);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    PhaseSpaceField f(g);
    for (auto& v : f.values) v = u(rng);
    const auto m = phase_norms(f, {1.0, 2.0, kInf});
    CHECK(m.at(2.0) <= std::sqrt(m.at(1.0) * m.at(kInf)) * (1.0 + 1e-12));
  }
}

TEST_CASE("interpolated sup recovers an off-grid peak") {
  PhaseSpaceGrid g(1, Grid1D(64, 12.0), Grid1D(64, 12.0));
  const double x0 = 0.0731, k0 = -0.0419;
  auto f = PhaseSpaceField::sample(g, [&](const double* z) { return std::exp(-0.5 * ((z[0] - x0) * (z[0] - x0) + (z[1] - k0) * (z[1] - k0))); });
  double sample_max = 0.0;
  for (double v : f.values) sample_max = std::max(sample_max, v);
  CHECK(sample_max < 1.0 - 1e-5);
  CHECK(interpolated_sup(f) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("PSF1 roundtrip") {
  auto f = gaussian_field(16, 5.0, 7.0, 1.0, 2.0);
  f.time = 0.125;
  const std::string path = "test_roundtrip.psf1";
  write_psf1(path, f);
  const auto g = read_psf1(path);
  CHECK(g.grid == f.grid);
  CHECK(g.time == f.time);
  CHECK(g.values == f.values);
  std::remove(path.c_str());
}
