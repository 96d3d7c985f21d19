#include "semiclab/phasespace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "semiclab/error.hpp"
#include "semiclab/fft.hpp"

namespace semiclab {

using fft::Complex;

namespace {

const Grid1D& axis_grid(const PhaseSpaceGrid& g, std::size_t axis) {
  return axis < static_cast<std::size_t>(g.dim) ? g.x : g.xi;
}

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) s[a - 1] = s[a] * shape[a];
  return s;
}

std::vector<Complex> to_complex(const std::vector<double>& v) { return {v.begin(), v.end()}; }

// Multiplies the Fourier coefficients along `axis` by (ik)^order.
void apply_derivative(std::vector<Complex>& c, const std::vector<std::size_t>& shape, std::size_t axis,
                      const Grid1D& grid, int order) {
  const auto strides = strides_of(shape);
  const std::size_t n = shape[axis];
  const std::size_t inner = strides[axis];
  const std::size_t outer = c.size() / (n * inner);
  std::vector<Complex> mult(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool nyquist = (i == n / 2);
    mult[i] = (nyquist && order % 2 == 1) ? Complex(0.0) : std::pow(Complex(0.0, grid.wavenumber(i)), order);
  }
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < n; ++i) {
      Complex* p = c.data() + (o * n + i) * inner;
      for (std::size_t j = 0; j < inner; ++j) p[j] *= mult[i];
    }
}

void for_each_composition(int total, std::size_t parts, std::vector<int>& cur, std::size_t pos,
                          const std::function<void(const std::vector<int>&)>& fn) {
  if (pos + 1 == parts) {
    cur[pos] = total;
    fn(cur);
    return;
  }
  for (int k = total; k >= 0; --k) {
    cur[pos] = k;
    for_each_composition(total - k, parts, cur, pos + 1, fn);
  }
}

double multinomial(const std::vector<int>& alpha) {
  int total = 0;
  double out = 1.0;
  for (int k : alpha) {
    for (int j = 1; j <= k; ++j) out *= static_cast<double>(total + j) / j;
    total += k;
  }
  return out;
}

double weighted_lp(const std::vector<double>& v, const std::vector<double>& weight, double cell, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]) * weight[i]);
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]) * weight[i], p);
  return std::pow(s * cell, 1.0 / p);
}

}  // namespace

PhaseSpaceField::PhaseSpaceField(PhaseSpaceGrid g, double t) : grid(g), values(g.size(), 0.0), time(t) {}

PhaseSpaceField PhaseSpaceField::sample(const PhaseSpaceGrid& g, const std::function<double(const double*)>& fn) {
  PhaseSpaceField f(g);
  const auto shape = g.shape();
  const std::size_t axes = shape.size();
  std::vector<std::size_t> idx(axes, 0);
  double coords[4];
  for (std::size_t flat = 0; flat < f.values.size(); ++flat) {
    for (std::size_t a = 0; a < axes; ++a) coords[a] = axis_grid(g, a).point(idx[a]);
    f.values[flat] = fn(coords);
    for (std::size_t a = axes; a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return f;
}

double PhaseSpaceField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

std::vector<double> spatial_density(const PhaseSpaceField& f) {
  const std::size_t nx = f.grid.spatial_size();
  const std::size_t nk = f.grid.momentum_size();
  const double dxi = f.grid.momentum_cell();
  std::vector<double> rho(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    double s = 0.0;
    const double* row = f.values.data() + i * nk;
    for (std::size_t k = 0; k < nk; ++k) s += row[k];
    rho[i] = s * dxi;
  }
  return rho;
}

double japanese_bracket(const PhaseSpaceGrid& g, std::size_t idx) {
  const auto shape = g.shape();
  double r2 = 1.0;
  for (std::size_t a = shape.size(); a-- > 0;) {
    const std::size_t i = idx % shape[a];
    idx /= shape[a];
    const double z = axis_grid(g, a).point(i);
    r2 += z * z;
  }
  return std::sqrt(r2);
}

double spectral_tail_fraction(const PhaseSpaceField& f) {
  const auto shape = f.grid.shape();
  std::vector<Complex> c = to_complex(f.values);
  for (std::size_t a = 0; a < shape.size(); ++a) fft::transform(c, shape, a, fft::kForward);
  const auto strides = strides_of(shape);
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t flat = 0; flat < c.size(); ++flat) {
    const double w = std::norm(c[flat]);
    total += w;
    bool high = false;
    for (std::size_t a = 0; a < shape.size() && !high; ++a) {
      const std::size_t i = (flat / strides[a]) % shape[a];
      const Grid1D& g = axis_grid(f.grid, a);
      high = std::abs(g.wavenumber(i)) > (2.0 / 3.0) * g.nyquist();
    }
    if (high) tail += w;
  }
  return total > 0.0 ? tail / total : 0.0;
}

void require_resolved(const PhaseSpaceField& f) {
  const double tail = spectral_tail_fraction(f);
  if (tail > 0.01) throw Error(ErrorCode::Resolution, "spectral tail above 2/3 Nyquist carries " + std::to_string(tail) + " of the L2 mass");
}

std::vector<double> spectral_mixed_derivative(const PhaseSpaceField& f, const std::vector<int>& orders) {
  const auto shape = f.grid.shape();
  std::vector<Complex> c = to_complex(f.values);
  bool any = false;
  for (std::size_t a = 0; a < orders.size(); ++a) {
    if (orders[a] == 0) continue;
    any = true;
    fft::transform(c, shape, a, fft::kForward);
    apply_derivative(c, shape, a, axis_grid(f.grid, a), orders[a]);
    fft::transform(c, shape, a, fft::kBackward);
    const double inv = 1.0 / static_cast<double>(shape[a]);
    for (auto& v : c) v *= inv;
  }
  if (!any) return f.values;
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

std::vector<double> spectral_derivative(const PhaseSpaceField& f, std::size_t axis, int order) {
  std::vector<int> orders(f.grid.shape().size(), 0);
  if (axis >= orders.size()) throw Error(ErrorCode::Dimension, "derivative axis out of range");
  orders[axis] = order;
  return spectral_mixed_derivative(f, orders);
}

double lebesgue_norm(const std::vector<double>& v, double cell, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p < 1.0) throw Error(ErrorCode::Exponent, "Lebesgue exponent must be >= 1");
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s * cell, 1.0 / p);
}

double weighted_sobolev_norm(const PhaseSpaceField& f, const WeightSpec& w) {
  if (w.sobolev_order < 0 || w.sobolev_order > 8) throw Error(ErrorCode::Resolution, "sobolev order must lie in [0, 8]");
  if (w.weight_power < 0.0 || !(w.lebesgue_p >= 1.0)) throw Error(ErrorCode::Config, "invalid weight specification");
  std::vector<double> weight(f.values.size(), 1.0);
  if (w.weight_power != 0.0)
    for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = std::pow(japanese_bracket(f.grid, i), w.weight_power);
  const double cell = f.grid.cell_volume();
  const double base = weighted_lp(f.values, weight, cell, w.lebesgue_p);
  if (w.sobolev_order == 0) return base;
  require_resolved(f);
  const std::size_t axes = f.grid.shape().size();
  std::vector<double> tensor2(f.values.size(), 0.0);
  std::vector<int> alpha(axes, 0);
  for_each_composition(w.sobolev_order, axes, alpha, 0, [&](const std::vector<int>& a) {
    const double mult = multinomial(a);
    const auto d = spectral_mixed_derivative(f, a);
    for (std::size_t i = 0; i < d.size(); ++i) tensor2[i] += mult * d[i] * d[i];
  });
  for (auto& v : tensor2) v = std::sqrt(v);
  return base + weighted_lp(tensor2, weight, cell, w.lebesgue_p);
}

double lorentz_norm(const std::vector<double>& g, double cell, double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw Error(ErrorCode::Exponent, "Lorentz exponents must be >= 1");
  std::vector<double> r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = std::abs(g[i]);
  std::sort(r.begin(), r.end(), std::greater<double>());
  if (std::isinf(q)) {
    double sup = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double t = static_cast<double>(j + 1) * cell;
      sup = std::max(sup, (std::isinf(p) ? 1.0 : std::pow(t, 1.0 / p)) * r[j]);
    }
    return sup;
  }
  if (std::isinf(p)) throw Error(ErrorCode::Exponent, "L^{inf,q} with finite q is degenerate");
  // Exact integral of (q/p) t^{q/p-1} g*(t)^q for the step rearrangement.
  double s = 0.0;
  double prev = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double cur = std::pow(static_cast<double>(j + 1) * cell, q / p);
    s += std::pow(r[j], q) * (cur - prev);
    prev = cur;
  }
  return std::pow(s, 1.0 / q);
}

std::map<double, double> phase_norms(const PhaseSpaceField& f, const std::vector<double>& p_list) {
  std::map<double, double> out;
  for (double p : p_list) out[p] = lebesgue_norm(f.values, f.grid.cell_volume(), p);
  return out;
}

double interpolated_sup(const PhaseSpaceField& f) {
  const auto shape = f.grid.shape();
  const std::size_t axes = shape.size();
  if (f.values.empty()) return 0.0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.values.size(); ++i)
    if (std::abs(f.values[i]) > std::abs(f.values[best])) best = i;
  const double sample_max = std::abs(f.values[best]);
  if (sample_max == 0.0) return 0.0;
  const double sgn = f.values[best] > 0.0 ? 1.0 : -1.0;

  std::vector<Complex> c = to_complex(f.values);
  for (std::size_t a = 0; a < axes; ++a) fft::transform(c, shape, a, fft::kForward);
  const double inv = 1.0 / static_cast<double>(c.size());
  for (auto& v : c) v *= inv;

  const auto strides = strides_of(shape);
  Eigen::VectorXd u(axes);  // offset from the first grid node
  Eigen::VectorXd h(axes);
  for (std::size_t a = 0; a < axes; ++a) {
    const Grid1D& g = axis_grid(f.grid, a);
    u[a] = static_cast<double>((best / strides[a]) % shape[a]) * g.spacing();
    h[a] = g.spacing();
  }

  std::vector<std::vector<Complex>> phase(axes);
  std::vector<std::vector<double>> kk(axes);
  for (std::size_t a = 0; a < axes; ++a) kk[a] = axis_grid(f.grid, a).wavenumbers();

  auto evaluate = [&](const Eigen::VectorXd& pos, double& val, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    for (std::size_t a = 0; a < axes; ++a) {
      phase[a].resize(shape[a]);
      for (std::size_t i = 0; i < shape[a]; ++i) phase[a][i] = std::polar(1.0, kk[a][i] * pos[a]);
    }
    Complex s0(0.0);
    std::vector<Complex> s1(axes, 0.0);
    std::vector<Complex> s2(axes * axes, 0.0);
    std::vector<std::size_t> idx(axes, 0);
    std::vector<double> kv(axes);
    for (std::size_t flat = 0; flat < c.size(); ++flat) {
      Complex term = c[flat];
      for (std::size_t a = 0; a < axes; ++a) {
        term *= phase[a][idx[a]];
        kv[a] = kk[a][idx[a]];
      }
      s0 += term;
      for (std::size_t a = 0; a < axes; ++a) {
        s1[a] += term * kv[a];
        for (std::size_t b = a; b < axes; ++b) s2[a * axes + b] += term * (kv[a] * kv[b]);
      }
      for (std::size_t a = axes; a-- > 0;) {
        if (++idx[a] < shape[a]) break;
        idx[a] = 0;
      }
    }
    val = s0.real();
    grad.resize(axes);
    hess.resize(axes, axes);
    for (std::size_t a = 0; a < axes; ++a) {
      grad[a] = (Complex(0.0, 1.0) * s1[a]).real();
      for (std::size_t b = a; b < axes; ++b) hess(a, b) = hess(b, a) = -s2[a * axes + b].real();
    }
  };

  double val = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double best_val = sample_max;
  for (int it = 0; it < 40; ++it) {
    evaluate(u, val, grad, hess);
    best_val = std::max(best_val, sgn * val);
    Eigen::VectorXd g = sgn * grad;
    Eigen::MatrixXd H = sgn * hess;
    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0).all())
      step = ldlt.solve(g);
    else
      step = 0.1 * h.cwiseProduct(g.normalized());
    double scale = 1.0;
    for (std::size_t a = 0; a < axes; ++a) scale = std::max(scale, std::abs(step[a]) / h[a]);
    step /= scale;
    u += step;
    double rel = 0.0;
    for (std::size_t a = 0; a < axes; ++a) rel = std::max(rel, std::abs(step[a]) / h[a]);
    if (rel < 1e-12) break;
  }
  evaluate(u, val, grad, hess);
  return std::max(best_val, sgn * val);
}

std::vector<double> derivative_1d(const std::vector<double>& v, double length, int order) {
  const std::size_t n = v.size();
  std::vector<Complex> c = to_complex(v);
  fft::transform_axis(c.data(), 1, n, 1, fft::kForward);
  const Grid1D g(n, length);
  apply_derivative(c, {n}, 0, g, order);
  fft::transform_axis(c.data(), 1, n, 1, fft::kBackward);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = c[i].real() / static_cast<double>(n);
  return out;
}

std::vector<double> half_shift_1d(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<Complex> c = to_complex(v);
  fft::transform_axis(c.data(), 1, n, 1, fft::kForward);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
    c[i] = (i == n / 2) ? Complex(0.0) : c[i] * std::polar(1.0, std::numbers::pi * k / static_cast<double>(n));
  }
  fft::transform_axis(c.data(), 1, n, 1, fft::kBackward);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = c[i].real() / static_cast<double>(n);
  return out;
}

}  // namespace semiclab
