#include "semiclab/estimates.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "semiclab/error.hpp"
#include "semiclab/schatten.hpp"

namespace semiclab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double positive_ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return kInf;
  return lhs / rhs;
}

double semiclassical_l2(const CMatrix& a, double hbar) { return a.norm() / std::sqrt(planck(hbar)); }

std::vector<double> field_weighted(const PhaseSpaceField& g, const std::vector<double>& values,
                                   const std::function<double(double, double)>& w) {
  const std::size_t nk = g.grid.momentum_size();
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * w(g.grid.x.point(i / nk), g.grid.xi.point(i % nk));
  return out;
}

double phase_l2(const PhaseSpaceField& g, const std::vector<double>& v) { return lebesgue_norm(v, g.grid.cell_volume(), 2.0); }

std::vector<double> mixed(const PhaseSpaceField& g, int ox, int oxi) {
  if (ox == 0 && oxi == 0) return g.values;
  return spectral_mixed_derivative(g, {ox, oxi});
}

KernelSpec grid_kernel(KernelSpec k, double spacing) {
  if (k.softening < 0.0) k.softening = default_softening(k, spacing);
  return k;
}

}  // namespace

// ---------------------------------------------------------------- bookkeeping

void finalize_ratio_check(BoundCheck& check, double factor) {
  double lo = kInf, hi = 0.0;
  for (auto& p : check.points) {
    p.ratio = positive_ratio(p.lhs, p.rhs_shape);
    if (p.ratio > 0.0) {
      lo = std::min(lo, p.ratio);
      hi = std::max(hi, p.ratio);
    }
  }
  check.fitted_c = check.points.empty() ? 0.0 : check.points.front().ratio;
  check.spread = hi > 0.0 ? hi / lo : 1.0;
  check.verdict = std::isfinite(check.spread) && check.spread < factor;
  check.details["factor"] = factor;
}

nlohmann::json to_json(const BoundCheck& check) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : check.points)
    pts.push_back({{"param", p.param}, {"lhs", p.lhs}, {"rhs_shape", p.rhs_shape}, {"ratio", p.ratio}});
  nlohmann::json j = {{"name", check.name}, {"axis", check.axis}, {"points", pts}, {"fitted_C", check.fitted_c},
                      {"verdict", check.verdict}};
  j["spread"] = check.spread;
  if (!check.details.empty()) j["details"] = check.details;
  return j;
}

BoundCheck bound_check_from_json(const nlohmann::json& j) {
  BoundCheck c;
  c.name = j.at("name").get<std::string>();
  c.axis = j.at("axis").get<std::string>();
  for (const auto& p : j.at("points"))
    c.points.push_back({p.at("param").get<double>(), p.at("lhs").get<double>(), p.at("rhs_shape").get<double>(), p.at("ratio").get<double>()});
  c.fitted_c = j.at("fitted_C").get<double>();
  c.verdict = j.at("verdict").get<bool>();
  if (j.contains("spread")) c.spread = j.at("spread").get<double>();
  if (j.contains("details")) c.details = j.at("details");
  return c;
}

RateFit rate_fit(const std::vector<double>& param, const std::vector<double>& error) {
  if (param.size() != error.size()) throw Error(ErrorCode::Config, "rate fit needs paired samples");
  if (param.size() < 3) throw Error(ErrorCode::FitUnderdetermined, "rate fit needs at least three points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!(param[i] > 0.0) || !(error[i] > 0.0)) throw Error(ErrorCode::NonpositiveError, "rate fit needs positive parameters and errors");
    lx.push_back(std::log(param[i]));
    ly.push_back(std::log(error[i]));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / m;
    my += ly[i] / m;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::FitUnderdetermined, "rate fit needs distinct parameters");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

CommutatorExponents commutator_exponents(const KernelSpec& k, double eps) {
  CommutatorExponents e;
  e.b = k.b();
  if (!(e.b > 1.0)) {
    e.b = 1.5;
    e.proxy = true;
  }
  e.b_conjugate = e.b / (e.b - 1.0);
  e.eps = eps > 0.0 ? eps : 0.5 * (e.b_conjugate - 1.0);
  if (e.eps > e.b_conjugate - 1.0) throw Error(ErrorCode::Exponent, "epsilon must lie in (0, b' - 1]");
  e.eps_tilde = e.eps / (4.0 * e.b_conjugate);
  return e;
}

std::size_t grid_size_for(double hbar, const LadderSpec& spec) {
  if (spec.fixed_n) return spec.fixed_n;
  const double need = std::max<double>(static_cast<double>(spec.min_n), 2.0 * spec.length * spec.xi_extent / (kPi * hbar));
  std::size_t n = 2;
  while (static_cast<double>(n) < need) n *= 2;
  return n;
}

Grid1D ladder_grid(double hbar, const LadderSpec& spec) { return Grid1D(grid_size_for(hbar, spec), spec.length); }

PhaseSpaceField sample_symbol(const Symbol& f, const Grid1D& x, double hbar) {
  const PhaseSpaceGrid g(1, x, conjugate_grid(x, hbar));
  return PhaseSpaceField::sample(g, [&](const double* z) { return f(z[0], z[1]); });
}

DensityOperator quantize_symbol(const Symbol& f, double hbar, const LadderSpec& spec) {
  return weyl_quantize(sample_symbol(f, ladder_grid(hbar, spec), hbar), hbar);
}

// ---------------------------------------------------------------- Gaussian superposition

double omega_a(double a, bool logarithmic) {
  if (logarithmic || a == 0.0) return 1.0;
  return 2.0 * std::pow(kPi, 0.5 * a) / boost::math::tgamma(0.5 * a);
}

double gaussian_superposition(double a, bool logarithmic, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::Config, "superposition needs r > 0");
  if (!logarithmic && !(a > -2.0 && a != 0.0)) throw Error(ErrorCode::Exponent, "superposition needs a in (-2, 0) or a > 0");
  boost::math::quadrature::tanh_sinh<double> near;
  boost::math::quadrature::exp_sinh<double> far;
  const double tol = 1e-12;
  double err_near = 0.0, err_far = 0.0, l1_near = 0.0, l1_far = 0.0;
  double total = 0.0;
  if (logarithmic) {
    auto fn = [r](double t) { return (std::expm1(-kPi * r * t) - std::expm1(-kPi * t)) / t; };
    total = near.integrate(fn, 0.0, 1.0, tol, &err_near, &l1_near);
    total += far.integrate(fn, 1.0, kInf, tol, &err_far, &l1_far);
  } else {
    const double s = 0.5 * a;
    const double t0 = 1.0 / (kPi * r);
    if (a > 0.0) {
      auto fn = [r, s](double t) { return std::pow(t, s - 1.0) * std::exp(-kPi * r * t); };
      total = near.integrate(fn, 0.0, t0, tol, &err_near, &l1_near);
      total += far.integrate(fn, t0, kInf, tol, &err_far, &l1_far);
    } else {
      auto sub = [r, s](double t) { return std::pow(t, s) * (std::expm1(-kPi * r * t) / t); };
      auto tail = [r, s](double t) { return std::pow(t, s - 1.0) * std::exp(-kPi * r * t); };
      total = near.integrate(sub, 0.0, t0, tol, &err_near, &l1_near);
      total += far.integrate(tail, t0, kInf, tol, &err_far, &l1_far);
      total += std::pow(t0, s) / s;  // minus the integral of t^{s-1} over (t0, inf)
    }
  }
  const double scale = std::max(l1_near + l1_far, 1e-300);
  if (!std::isfinite(total) || err_near + err_far > 1e-8 * scale) throw Error(ErrorCode::QuadratureFail, "Gaussian superposition quadrature did not converge");
  return 0.5 * total;
}

BoundCheck gaussian_decomposition_check(const KernelSpec& k, const std::vector<double>& radii) {
  BoundCheck c;
  c.name = "gaussian_decomposition";
  c.axis = "radius";
  const double w = omega_a(k.a, k.logarithmic);
  double worst = 0.0;
  for (double rad : radii) {
    const double r2 = rad * rad + k.softening * k.softening;
    const double closed = k.logarithmic ? -0.5 * std::log(r2) : std::pow(r2, -0.5 * k.a) / w;
    const double quad = gaussian_superposition(k.a, k.logarithmic, r2);
    const double diff = std::abs(closed - quad);
    worst = std::max(worst, closed == 0.0 ? diff : diff / std::abs(closed));
    c.points.push_back({rad, closed, quad, positive_ratio(closed, quad)});
  }
  c.fitted_c = 1.0;
  c.spread = 1.0 + worst;
  c.verdict = worst <= 1e-6;
  c.details = {{"omega_a", w}, {"a", k.a}, {"logarithmic", k.logarithmic}, {"max_relative_residual", worst}};
  return c;
}

// ---------------------------------------------------------------- commutators

CMatrix kernel_commutator(const DensityOperator& rho, const KernelSpec& k, double z) {
  const std::size_t n = rho.size();
  std::vector<double> kz(n);
  for (std::size_t i = 0; i < n; ++i) kz[i] = k.value(std::abs(rho.grid.point(i) - z));
  CMatrix c(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) c(i, j) = (kz[i] - kz[j]) * rho.matrix(i, j);
  return c;
}

CommutatorSides commutator_trace_sides(const DensityOperator& rho, const KernelSpec& kernel, double z, const CommutatorExponents& e) {
  const KernelSpec k = grid_kernel(kernel, rho.grid.spacing());
  k.validate(rho.grid.spacing());
  CommutatorSides s;
  // i [K, rho] is Hermitian for Hermitian rho.
  s.lhs = trace_norm(Complex(0.0, 1.0) * kernel_commutator(rho, k, z));
  const std::vector<double> rho1 = diag_abs(quantum_grad_xi(rho), rho.grid);
  const double dx = rho.grid.spacing();
  const double lo = lebesgue_norm(rho1, dx, e.b_conjugate - e.eps);
  const double hi = lebesgue_norm(rho1, dx, e.b_conjugate + e.eps);
  s.rhs_shape = planck(rho.hbar) * std::pow(lo, 0.5 + e.eps_tilde) * std::pow(hi, 0.5 - e.eps_tilde);
  return s;
}

BoundCheck commutator_trace_check(const DensityOperator& rho, const KernelSpec& k, const std::vector<double>& z_list, double factor) {
  const CommutatorExponents e = commutator_exponents(k);
  BoundCheck c;
  c.name = "commutator_trace";
  c.axis = "z";
  for (double z : z_list) {
    const CommutatorSides s = commutator_trace_sides(rho, k, z, e);
    c.points.push_back({z, s.lhs, s.rhs_shape, 0.0});
  }
  finalize_ratio_check(c, factor);
  c.details["b"] = e.b;
  c.details["b_conjugate"] = e.b_conjugate;
  c.details["eps"] = e.eps;
  c.details["eps_tilde"] = e.eps_tilde;
  c.details["proxy_exponents"] = e.proxy;
  c.details["softening"] = grid_kernel(k, rho.grid.spacing()).softening;
  c.details["hbar"] = rho.hbar;
  return c;
}

CommutatorSides commutator_lp_sides(const DensityOperator& rho, const KernelSpec& kernel, double z, double p, int n) {
  const KernelSpec k = grid_kernel(kernel, rho.grid.spacing());
  k.validate(rho.grid.spacing());
  const CommutatorExponents e = commutator_exponents(k);
  if (!(p >= 1.0) || p >= e.b) throw Error(ErrorCode::Exponent, "commutator L^p bound needs 1 <= p < b");
  if (!(n > k.a + 1.0)) throw Error(ErrorCode::Exponent, "momentum weight order must exceed a + 1");
  const double q = 1.0 / (1.0 / p - 1.0 / e.b);
  const double eps = 0.5 * (q - 1.0);
  const double eps_tilde = eps / q;
  CommutatorSides s;
  s.lhs = semiclassical_norm(kernel_commutator(rho, k, z), rho.hbar, p);
  const CMatrix weighted = right_momentum_multiply(quantum_grad_xi(rho), rho.grid, rho.hbar,
                                                   [n](double mom) { return 1.0 + std::pow(std::abs(mom), n); });
  const double up = semiclassical_norm(weighted, rho.hbar, q + eps);
  const double down = semiclassical_norm(weighted, rho.hbar, q - eps);
  s.rhs_shape = planck(rho.hbar) * std::pow(up, 0.5 + eps_tilde) * std::pow(down, 0.5 - eps_tilde);
  return s;
}

BoundCheck commutator_lp_check(const DensityOperator& rho, const KernelSpec& k, const std::vector<double>& z_list, double p, double factor) {
  const CommutatorExponents e = commutator_exponents(k);
  BoundCheck c;
  c.name = "commutator_lp";
  c.axis = "z";
  for (double z : z_list) {
    const CommutatorSides s = commutator_lp_sides(rho, k, z, p);
    c.points.push_back({z, s.lhs, s.rhs_shape, 0.0});
  }
  finalize_ratio_check(c, factor);
  c.details["p"] = p;
  c.details["q"] = 1.0 / (1.0 / p - 1.0 / e.b);
  c.details["b"] = e.b;
  c.details["proxy_exponents"] = e.proxy;
  c.details["hbar"] = rho.hbar;
  return c;
}

CommutatorSides kinetic_interpolation_sides(const DensityOperator& rho, int n1) {
  if (n1 < 0 || n1 % 2) throw Error(ErrorCode::Exponent, "kinetic interpolation needs an even n1 >= 0");
  const double p = 1.0 + n1;
  const double theta = 1.0 / p;
  const CMatrix grad = quantum_grad_xi(rho);
  CommutatorSides s;
  s.lhs = lebesgue_norm(diag_abs(grad, rho.grid), rho.grid.spacing(), p);
  const double moment = abs_momentum_moment(grad, rho.grid, rho.hbar, [n1](double mom) { return std::pow(std::abs(mom), n1); });
  const double sup = singular_values(grad)[0] / planck(rho.hbar);
  s.rhs_shape = std::pow(moment, theta) * std::pow(sup, 1.0 - theta);
  return s;
}

BoundCheck kinetic_interpolation_check(const DensityOperator& rho, int n1) {
  BoundCheck c;
  c.name = "kinetic_interpolation";
  c.axis = "hbar";
  const CommutatorSides s = kinetic_interpolation_sides(rho, n1);
  c.points.push_back({rho.hbar, s.lhs, s.rhs_shape, 0.0});
  finalize_ratio_check(c);
  c.details["n1"] = n1;
  c.details["p"] = 1.0 + n1;
  return c;
}

// ---------------------------------------------------------------- Weyl multiplication

WeylBoundReport weighted_weyl_sides(const PhaseSpaceField& g, double hbar, int n, int n1) {
  if (g.grid.dim != 1) throw Error(ErrorCode::Dimension, "Weyl bounds are one-dimensional");
  if (n < 0 || n1 < 0 || n % 2 || n1 % 2) throw Error(ErrorCode::Exponent, "Weyl bounds need even n, n1 >= 0");
  require_resolved(g);
  const Grid1D& x = g.grid.x;
  const DensityOperator op = weyl_quantize(g, hbar);
  const auto right_p = [&](const CMatrix& a, int power) {
    if (power == 0) return a;
    return right_momentum_multiply(a, x, hbar, [power](double mom) { return std::pow(std::abs(mom), power); });
  };
  const auto right_x = [&](CMatrix a, int power) {
    if (power == 0) return a;
    for (std::size_t j = 0; j < x.n_points; ++j) a.col(j) *= std::pow(std::abs(x.point(j)), power);
    return a;
  };
  const auto pw = [](double v, int e) { return e == 0 ? 1.0 : std::pow(std::abs(v), e); };
  const auto jb = [](double v, int e) { return std::pow(1.0 + v * v, 0.5 * e); };

  WeylBoundReport rep;
  rep.prefactor_p = std::pow(4.0, n);
  rep.prefactor_x = std::pow(9.0 / 4.0, n);

  const double lhs_p = semiclassical_l2(right_p(op.matrix, n), hbar);
  const double rhs_p = rep.prefactor_p * (phase_l2(g, field_weighted(g, g.values, [&](double, double k) { return pw(k, n); })) +
                                          std::pow(0.5 * hbar, n) * phase_l2(g, mixed(g, n, 0)));
  rep.sides.push_back({"weyl_vs_p", lhs_p, rhs_p});

  const double lhs_x = semiclassical_l2(right_x(op.matrix, n), hbar);
  const double rhs_x = rep.prefactor_x * (phase_l2(g, field_weighted(g, g.values, [&](double xx, double) { return pw(xx, n); })) +
                                          std::pow(hbar, n) * phase_l2(g, mixed(g, 0, n)));
  rep.sides.push_back({"weyl_vs_x", lhs_x, rhs_x});

  const double lhs_xp = semiclassical_l2(right_x(right_p(op.matrix, n1), n), hbar);
  const double rhs_xp =
      phase_l2(g, field_weighted(g, g.values, [&](double xx, double k) { return 1.0 + pw(xx, n) * pw(k, n1); })) +
      std::pow(hbar, n1) * phase_l2(g, field_weighted(g, mixed(g, n1, 0), [&](double xx, double) { return pw(xx, n); })) +
      std::pow(hbar, n) * phase_l2(g, field_weighted(g, mixed(g, 0, n), [&](double, double k) { return pw(k, n1); })) +
      std::pow(hbar, n + n1) * phase_l2(g, mixed(g, n1, n));
  rep.sides.push_back({"weyl_vs_xp", lhs_xp, rhs_xp});

  if (n >= 2) {
    const int k = n + n1;
    const double lhs_m = abs_momentum_moment(op.matrix, x, hbar, [n1](double mom) { return std::pow(std::abs(mom), n1); });
    const double rhs_m =
        phase_l2(g, field_weighted(g, g.values, [&](double xx, double kk) { return jb(kk, k) * jb(xx, n); })) +
        std::pow(hbar, k) * phase_l2(g, field_weighted(g, mixed(g, k, 0), [&](double xx, double) { return jb(xx, n); })) +
        std::pow(hbar, n) * phase_l2(g, field_weighted(g, mixed(g, 0, n), [&](double, double kk) { return jb(kk, k); })) +
        std::pow(hbar, k + n) * phase_l2(g, mixed(g, k, n));
    rep.sides.push_back({"moment_bound", lhs_m, rhs_m});

    const double p = 1.0 + n1;
    const double lhs_d = lebesgue_norm(diag_abs(quantum_grad_xi(op), x), x.spacing(), p);
    PhaseSpaceField dxi(g.grid);
    dxi.values = spectral_derivative(g, 1, 1);
    const int sigma = 2 * n + n1;
    const double rhs_d = weighted_sobolev_norm(dxi, {1, 0.0, kInf}) + weighted_sobolev_norm(dxi, {sigma, static_cast<double>(sigma), 2.0});
    rep.sides.push_back({"diag_vs_symbol", lhs_d, rhs_d});
  }

  MidpointSymbol sp = MidpointSymbol::interpolate(g);
  for (int i = 0; i < n; ++i) sp = symbol_times_p(sp, hbar);
  rep.symbol_route_p = sp.l2_norm();
  return rep;
}

std::vector<BoundCheck> weighted_weyl_bound_check(const Symbol& g, const LadderSpec& ladder, int n, int n1, double factor) {
  std::vector<BoundCheck> checks;
  std::vector<double> route;
  for (double hbar : ladder.hbar) {
    const WeylBoundReport rep = weighted_weyl_sides(sample_symbol(g, ladder_grid(hbar, ladder), hbar), hbar, n, n1);
    if (checks.empty()) {
      for (const auto& s : rep.sides) {
        BoundCheck c;
        c.name = s.name;
        c.axis = "hbar";
        checks.push_back(c);
      }
    }
    for (std::size_t i = 0; i < rep.sides.size(); ++i) checks[i].points.push_back({hbar, rep.sides[i].lhs, rep.sides[i].rhs_shape, 0.0});
    route.push_back(rep.symbol_route_p);
    for (auto& c : checks) {
      c.details["n"] = n;
      c.details["n1"] = n1;
      if (c.name == "weyl_vs_p") c.details["prefactor"] = rep.prefactor_p;
      if (c.name == "weyl_vs_x") c.details["prefactor"] = rep.prefactor_x;
    }
  }
  for (auto& c : checks) {
    finalize_ratio_check(c, factor);
    if (c.name == "weyl_vs_p") c.details["symbol_route"] = route;
  }
  return checks;
}

// ---------------------------------------------------------------- exchange

ExchangeSides exchange_sides(const DensityOperator& rho, const KernelSpec& kernel) {
  const KernelSpec k = grid_kernel(kernel, rho.grid.spacing());
  if (k.logarithmic) throw Error(ErrorCode::Exponent, "exchange bound covers power kernels only");
  k.validate(rho.grid.spacing());
  const double h = planck(rho.hbar);
  ExchangeSides s;
  s.trace = (exchange_operator(rho, k).array() * rho.matrix.transpose().array()).sum().real();
  const std::size_t n = rho.size();
  const double half = 0.5 * std::abs(k.a);
  CMatrix weighted;
  double moment = 0.0;
  double power = 0.0;
  if (k.a >= 0.0) {
    weighted = left_momentum_multiply(rho.matrix, rho.grid, rho.hbar, [half](double mom) { return std::pow(std::abs(mom), half); });
    moment = abs_momentum_moment(rho.matrix, rho.grid, rho.hbar, [a = k.a](double mom) { return std::pow(std::abs(mom), a); });
    power = k.d - k.a;
  } else {
    weighted = rho.matrix;
    for (std::size_t i = 0; i < n; ++i) weighted.row(i) *= std::pow(std::abs(rho.grid.point(i)), half);
    const HermitianEigen e = eigh(rho.matrix);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        moment += std::abs(e.values[j]) * std::pow(std::abs(rho.grid.point(i)), std::abs(k.a)) * std::norm(e.vectors(i, j));
    power = k.d;
  }
  s.weighted_l2 = weighted.squaredNorm() / h;
  s.rhs_shape = std::pow(h, power) * s.weighted_l2;
  s.energy_bound = singular_values(rho.matrix)[0] / h * moment;
  return s;
}

BoundCheck exchange_bound_check(const std::vector<DensityOperator>& ladder, const KernelSpec& k, double factor) {
  BoundCheck c;
  c.name = "exchange";
  c.axis = "hbar";
  std::vector<double> hs, traces, softenings;
  bool controlled = true;
  for (const auto& rho : ladder) {
    const KernelSpec kk = grid_kernel(k, rho.grid.spacing());
    const ExchangeSides s = exchange_sides(rho, kk);
    c.points.push_back({rho.hbar, s.trace, s.rhs_shape, 0.0});
    hs.push_back(planck(rho.hbar));
    traces.push_back(std::abs(s.trace));
    softenings.push_back(kk.softening);
    if (s.weighted_l2 > s.energy_bound * (1.0 + 1e-10)) controlled = false;
  }
  finalize_ratio_check(c, factor);
  c.details["s"] = k.a >= 0.0 ? k.d - k.a : static_cast<double>(k.d);
  c.details["softening"] = softenings;
  c.details["weighted_l2_controlled"] = controlled;
  if (hs.size() >= 3) {
    const RateFit fit = rate_fit(hs, traces);
    c.details["slope"] = fit.slope;
    c.details["r2"] = fit.r2;
  }
  return c;
}

// ---------------------------------------------------------------- classical stability

BoundCheck classical_stability_check(const PhaseSpaceField& f1, const PhaseSpaceField& f2, const KernelSpec& k, const StabilityOptions& opt) {
  if (f1.grid != f2.grid) throw Error(ErrorCode::GridMismatch, "stability pair lives on different grids");
  if (f1.grid.dim != 1) throw Error(ErrorCode::Dimension, "classical stability check is one-dimensional");
  const KernelSpec kk = grid_kernel(k, f1.grid.x.spacing());
  const VlasovSolver solver(f1.grid, kk);
  const CommutatorExponents e = commutator_exponents(kk);
  const double cell = f1.grid.cell_volume();
  const double dx = f1.grid.spatial_cell();
  const double dxi = f1.grid.momentum_cell();
  const std::size_t nk = f1.grid.momentum_size();

  // g(x) = int |d_xi f2| dxi.
  const auto xi_profile = [&](const PhaseSpaceField& f) {
    const std::vector<double> d = spectral_derivative(f, 1, 1);
    std::vector<double> g(f.grid.spatial_size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) g[i / nk] += std::abs(d[i]) * dxi;
    return g;
  };
  const auto distance = [&](const PhaseSpaceField& a, const PhaseSpaceField& b, double p) {
    std::vector<double> diff(a.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.values[i] - b.values[i];
    return lebesgue_norm(diff, cell, p);
  };
  const auto sharp_rate = [&](const std::vector<double>& g) {
    if (kk.is_off()) return 0.0;
    const std::vector<double> conv = solver.mean_field().abs_gradient_convolve(g);
    return *std::max_element(conv.begin(), conv.end());
  };

  PhaseSpaceField a = f1, b = f2;
  std::vector<double> g = xi_profile(b);
  double lorentz = lorentz_norm(g, dx, e.b_conjugate, 1.0);
  double rate = sharp_rate(g);
  const double d0 = distance(a, b, 1.0);
  const double c_fit = lorentz > 0.0 ? rate / lorentz : 0.0;

  BoundCheck c;
  c.name = "classical_stability";
  c.axis = "t";
  std::vector<double> sharp, lp, times;
  double int_lorentz = 0.0, int_rate = 0.0;
  const int steps = static_cast<int>(std::llround(opt.t_final / opt.dt));
  const auto record = [&](double t) {
    const double env = d0 * std::exp(c_fit * int_lorentz);
    c.points.push_back({t, distance(a, b, 1.0), env, 0.0});
    sharp.push_back(d0 * std::exp(int_rate));
    lp.push_back(distance(a, b, opt.lp));
    times.push_back(t);
  };
  record(0.0);
  for (int s = 1; s <= steps; ++s) {
    solver.step(a, opt.dt);
    solver.step(b, opt.dt);
    const std::vector<double> g_new = xi_profile(b);
    const double lorentz_new = lorentz_norm(g_new, dx, e.b_conjugate, 1.0);
    const double rate_new = sharp_rate(g_new);
    int_lorentz += 0.5 * opt.dt * (lorentz + lorentz_new);
    int_rate += 0.5 * opt.dt * (rate + rate_new);
    lorentz = lorentz_new;
    rate = rate_new;
    if (s % opt.record_every == 0 || s == steps) record(s * opt.dt);
  }
  bool below = true;
  double worst = 0.0;
  for (auto& p : c.points) {
    p.ratio = positive_ratio(p.lhs, p.rhs_shape);
    if (p.lhs > p.rhs_shape * (1.0 + 1e-9) + 1e-12) below = false;
    worst = std::max(worst, p.ratio);
  }
  c.fitted_c = c_fit;
  c.spread = worst;
  c.verdict = below;
  c.details = {{"initial_distance", d0},
               {"sharp_envelope", sharp},
               {"lp_exponent", opt.lp},
               {"lp_distance", lp},
               {"b_conjugate", e.b_conjugate},
               {"proxy_exponents", e.proxy},
               {"softening", kk.softening},
               {"max_ratio", worst}};
  const double inv_q = 1.0 / opt.lp - 1.0 / e.b;
  if (inv_q > 0.0) c.details["lp_companion_q"] = 1.0 / inv_q;
  return c;
}

}  // namespace semiclab
