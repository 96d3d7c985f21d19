#include "semiclab/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numbers>

#include "semiclab/error.hpp"
#include "semiclab/fft.hpp"

namespace semiclab {

namespace {

constexpr Complex kI(0.0, 1.0);

void require_1d(const PhaseSpaceField& f) {
  if (f.grid.dim != 1) throw Error(ErrorCode::Dimension, "density operators are one-dimensional");
}

void require_square(const CMatrix& a, const Grid1D& g) {
  if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != g.n_points)
    throw Error(ErrorCode::GridMismatch, "matrix size does not match the grid");
}

// (-i)^r for integer r.
Complex minus_i_power(long r) {
  switch (((r % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

void check_resolvable(const Grid1D& x, const Grid1D& xi, double hbar) {
  const double dx = x.spacing();
  const double dxi = xi.spacing();
  const double xi_max = 0.5 * xi.length;
  const double tol = 1.0 + 1e-12;
  if (static_cast<double>(x.n_points - 1) * dx * dxi / hbar > std::numbers::pi * tol)
    throw Error(ErrorCode::Aliasing, "phase increment per momentum step exceeds pi");
  if (xi_max * dx / hbar > std::numbers::pi * tol)
    throw Error(ErrorCode::Aliasing, "phase increment per spatial step exceeds pi");
}

}  // namespace

DensityOperator::DensityOperator(Grid1D g, double h) : grid(g), hbar(h), matrix(CMatrix::Zero(g.n_points, g.n_points)) {}

DensityOperator::DensityOperator(Grid1D g, double h, CMatrix m) : grid(g), hbar(h), matrix(std::move(m)) {
  require_square(matrix, grid);
}

std::vector<double> DensityOperator::density() const {
  std::vector<double> out(size());
  const double dx = grid.spacing();
  for (std::size_t i = 0; i < size(); ++i) out[i] = matrix(i, i).real() / dx;
  return out;
}

double planck(double hbar) { return 2.0 * std::numbers::pi * hbar; }

MidpointSymbol::MidpointSymbol(Grid1D xg, Grid1D xig) : x(xg), xi(xig), values(2 * xg.n_points * xig.n_points) {}

MidpointSymbol MidpointSymbol::interpolate(const PhaseSpaceField& f) {
  require_1d(f);
  MidpointSymbol s(f.grid.x, f.grid.xi);
  const std::size_t n = f.grid.x.n_points;
  const std::size_t nk = f.grid.xi.n_points;
  std::vector<double> column(n);
  for (std::size_t k = 0; k < nk; ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = f.at(i, k);
    const auto shifted = half_shift_1d(column);
    for (std::size_t i = 0; i < n; ++i) {
      s.at(2 * i, k) = column[i];
      s.at(2 * i + 1, k) = shifted[i];
    }
  }
  return s;
}

MidpointSymbol MidpointSymbol::from_function(const Grid1D& xg, const Grid1D& xig,
                                             const std::function<Complex(double, double)>& fn) {
  MidpointSymbol s(xg, xig);
  for (std::size_t m = 0; m < 2 * xg.n_points; ++m) {
    const double xm = s.row_point(m);
    for (std::size_t k = 0; k < xig.n_points; ++k) s.at(m, k) = fn(xm, xig.point(k));
  }
  return s;
}

MidpointSymbol MidpointSymbol::derivative_x(int order) const {
  MidpointSymbol out = *this;
  if (order == 0) return out;
  const std::size_t rows2 = 2 * x.n_points;
  const Grid1D doubled(rows2, x.length);
  fft::transform_axis(out.values.data(), 1, rows2, cols(), fft::kForward);
  for (std::size_t m = 0; m < rows2; ++m) {
    const Complex mult = (m == rows2 / 2 && order % 2 == 1) ? Complex(0.0) : std::pow(kI * doubled.wavenumber(m), order);
    for (std::size_t k = 0; k < cols(); ++k) out.at(m, k) *= mult / static_cast<double>(rows2);
  }
  fft::transform_axis(out.values.data(), 1, rows2, cols(), fft::kBackward);
  return out;
}

MidpointSymbol MidpointSymbol::derivative_xi(int order) const {
  MidpointSymbol out = *this;
  if (order == 0) return out;
  const std::size_t nk = cols();
  fft::transform_axis(out.values.data(), 2 * x.n_points, nk, 1, fft::kForward);
  std::vector<Complex> mult(nk);
  for (std::size_t k = 0; k < nk; ++k)
    mult[k] = (k == nk / 2 && order % 2 == 1) ? Complex(0.0) : std::pow(kI * xi.wavenumber(k), order) / static_cast<double>(nk);
  for (std::size_t m = 0; m < 2 * x.n_points; ++m)
    for (std::size_t k = 0; k < nk; ++k) out.at(m, k) *= mult[k];
  fft::transform_axis(out.values.data(), 2 * x.n_points, nk, 1, fft::kBackward);
  return out;
}

MidpointSymbol MidpointSymbol::operator+(const MidpointSymbol& o) const {
  MidpointSymbol out = *this;
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] += o.values[i];
  return out;
}

MidpointSymbol MidpointSymbol::operator*(Complex c) const {
  MidpointSymbol out = *this;
  for (auto& v : out.values) v *= c;
  return out;
}

MidpointSymbol MidpointSymbol::times(const std::function<Complex(double, double)>& g) const {
  MidpointSymbol out = *this;
  for (std::size_t m = 0; m < 2 * x.n_points; ++m) {
    const double xm = row_point(m);
    for (std::size_t k = 0; k < cols(); ++k) out.at(m, k) *= g(xm, xi.point(k));
  }
  return out;
}

double MidpointSymbol::l2_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.n_points; ++i)
    for (std::size_t k = 0; k < cols(); ++k) s += std::norm(at(2 * i, k));
  return std::sqrt(s * x.spacing() * xi.spacing());
}

CMatrix weyl_matrix(const MidpointSymbol& s, double hbar) {
  const Grid1D& x = s.x;
  const Grid1D& xi = s.xi;
  check_resolvable(x, xi, hbar);
  const std::size_t n = x.n_points;
  const std::size_t nk = xi.n_points;
  const std::size_t rows = 2 * n - 1;
  const double dx = x.spacing();
  const double cell = dx * xi.spacing();
  CMatrix out(n, n);

  if (is_conjugate(x, xi, hbar)) {
    // r = i - j = 2 s + p with p = m mod 2; the phase sum is a length-n inverse DFT in s.
    std::vector<Complex> work(rows * n);
    for (std::size_t m = 0; m < rows; ++m) {
      const double p = static_cast<double>(m % 2);
      for (std::size_t k = 0; k < n; ++k)
        work[m * n + k] = s.at(m, k) * std::polar(1.0, std::numbers::pi * p * static_cast<double>(k) / static_cast<double>(n));
    }
    fft::transform_axis(work.data(), rows, n, 1, fft::kBackward);
    for (std::size_t m = 0; m < rows; ++m) {
      const long p = static_cast<long>(m % 2);
      const std::size_t i_lo = m >= n ? m - n + 1 : 0;
      const std::size_t i_hi = std::min(m, n - 1);
      for (std::size_t i = i_lo; i <= i_hi; ++i) {
        const std::size_t j = m - i;
        const long r = static_cast<long>(i) - static_cast<long>(j);
        const long sidx = (r - p) / 2;
        const std::size_t slot = static_cast<std::size_t>((sidx % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n));
        out(i, j) = cell * minus_i_power(r) * work[m * n + slot];
      }
    }
    return out;
  }

  // General momentum grid: direct phase sums with a shared phase table.
  const long span = static_cast<long>(n) - 1;
  std::vector<Complex> table((2 * span + 1) * nk);
  for (long r = -span; r <= span; ++r)
    for (std::size_t k = 0; k < nk; ++k)
      table[(r + span) * nk + k] = std::polar(1.0, static_cast<double>(r) * dx * xi.point(k) / hbar);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t m = i + j;
      const long r = static_cast<long>(i) - static_cast<long>(j);
      const Complex* ph = table.data() + (r + span) * nk;
      Complex acc(0.0);
      for (std::size_t k = 0; k < nk; ++k) acc += s.at(m, k) * ph[k];
      out(i, j) = cell * acc;
    }
  return out;
}

DensityOperator weyl_quantize(const PhaseSpaceField& f, double hbar) {
  require_1d(f);
  return DensityOperator(f.grid.x, hbar, weyl_matrix(MidpointSymbol::interpolate(f), hbar));
}

DensityOperator weyl_quantize(const PhaseSpaceField& f, double hbar, const SymbolFunction& analytic) {
  require_1d(f);
  const auto s = MidpointSymbol::from_function(f.grid.x, f.grid.xi, [&](double x, double k) { return Complex(analytic(x, k)); });
  return DensityOperator(f.grid.x, hbar, weyl_matrix(s, hbar));
}

PhaseSpaceField wigner_transform(const DensityOperator& rho) {
  const std::size_t n = rho.size();
  require_square(rho.matrix, rho.grid);
  const PhaseSpaceGrid g(1, rho.grid, conjugate_grid(rho.grid, rho.hbar));
  PhaseSpaceField f(g);
  std::vector<Complex> work(n * n, Complex(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t smax = std::min(i, n - 1 - i);
    Complex* row = work.data() + i * n;
    for (std::size_t s = 0; s <= smax; ++s) {
      const double sign = (s % 2 == 0) ? 1.0 : -1.0;
      row[s] += sign * rho.matrix(i + s, i - s);
      if (s > 0) row[n - s] += sign * rho.matrix(i - s, i + s);
    }
  }
  fft::transform_axis(work.data(), n, n, 1, fft::kForward);
  const double scale = 1.0 / (std::numbers::pi * rho.hbar);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) f.at(i, k) = scale * work[i * n + k].real();
  return f;
}

CMatrix quantum_grad_x(const DensityOperator& rho) {
  const std::size_t n = rho.size();
  require_square(rho.matrix, rho.grid);
  CMatrix work = rho.matrix;
  fft::transform_matrix(work.data(), n, fft::kForward);
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = (i == n / 2) ? 0.0 : rho.grid.wavenumber(i);
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) work(i, j) *= kI * (k[i] + k[j]) * norm;
  fft::transform_matrix(work.data(), n, fft::kBackward);
  return work;
}

CMatrix quantum_grad_xi(const DensityOperator& rho) {
  const std::size_t n = rho.size();
  require_square(rho.matrix, rho.grid);
  CMatrix out(n, n);
  const Complex factor = 1.0 / (kI * rho.hbar);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) out(i, j) = (rho.grid.point(i) - rho.grid.point(j)) * factor * rho.matrix(i, j);
  return out;
}

std::vector<double> diag_abs(const CMatrix& a, const Grid1D& grid) {
  require_square(a, grid);
  if (hermiticity_defect(a) > 1e-8) throw Error(ErrorCode::NonHermitian, "diag_abs requires a Hermitian operator");
  const HermitianEigen e = eigh(a);
  const std::size_t n = grid.n_points;
  std::vector<double> out(n, 0.0);
  const double dx = grid.spacing();
  for (std::size_t j = 0; j < n; ++j) {
    const double w = std::abs(e.values[j]) / dx;
    for (std::size_t i = 0; i < n; ++i) out[i] += w * std::norm(e.vectors(i, j));
  }
  return out;
}

CMatrix right_momentum_multiply(const CMatrix& a, const Grid1D& grid, double hbar, const std::function<double(double)>& m) {
  require_square(a, grid);
  const std::size_t n = grid.n_points;
  CMatrix work = a;
  fft::transform_axis(work.data(), 1, n, n, fft::kBackward);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = m(hbar * grid.wavenumber(k)) / static_cast<double>(n);
    work.col(k) *= w;
  }
  fft::transform_axis(work.data(), 1, n, n, fft::kForward);
  return work;
}

CMatrix left_momentum_multiply(const CMatrix& a, const Grid1D& grid, double hbar, const std::function<double(double)>& m) {
  require_square(a, grid);
  const std::size_t n = grid.n_points;
  CMatrix work = a;
  fft::transform_axis(work.data(), n, n, 1, fft::kForward);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = m(hbar * grid.wavenumber(k)) / static_cast<double>(n);
    work.row(k) *= w;
  }
  fft::transform_axis(work.data(), n, n, 1, fft::kBackward);
  return work;
}

double abs_momentum_moment(const CMatrix& a, const Grid1D& grid, double hbar, const std::function<double(double)>& m) {
  require_square(a, grid);
  if (hermiticity_defect(a) > 1e-8) throw Error(ErrorCode::NonHermitian, "momentum moment requires a Hermitian operator");
  const HermitianEigen e = eigh(a);
  const std::size_t n = grid.n_points;
  CMatrix modes = e.vectors;
  fft::transform_axis(modes.data(), n, n, 1, fft::kForward);
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = m(hbar * grid.wavenumber(k)) / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double expect = 0.0;
    for (std::size_t k = 0; k < n; ++k) expect += w[k] * std::norm(modes(k, j));
    total += std::abs(e.values[j]) * expect;
  }
  return total;
}

double WeylIdentityReport::max_residual() const {
  double m = 0.0;
  for (const auto& r : identities) m = std::max(m, r.residual);
  return m;
}

MidpointSymbol symbol_times_p(const MidpointSymbol& g, double hbar) {
  return g.times([](double, double k) { return Complex(k); }) + g.derivative_x(1) * (0.5 * kI * hbar);
}

MidpointSymbol symbol_times_x(const MidpointSymbol& g, double hbar) {
  return g.times([](double x, double) { return Complex(x); }) + g.derivative_xi(1) * (-0.5 * kI * hbar);
}

double expansion_coefficient_sum(int d, int n, double c) {
  if (n < 0 || n % 2 != 0) throw Error(ErrorCode::Exponent, "expansion order must be even and nonnegative");
  using Monomial = std::vector<int>;  // exponents of y_0..y_{d-1}, D_0..D_{d-1}
  std::map<Monomial, double> poly{{Monomial(2 * d, 0), 1.0}};
  std::vector<std::pair<Monomial, double>> q;
  for (int a = 0; a < d; ++a) {
    Monomial yy(2 * d, 0), yd(2 * d, 0), dd(2 * d, 0);
    yy[a] = 2;
    yd[a] = 1;
    yd[d + a] = 1;
    dd[d + a] = 2;
    q.emplace_back(yy, 1.0);
    q.emplace_back(yd, 2.0 * c);
    q.emplace_back(dd, c * c);
  }
  for (int step = 0; step < n / 2; ++step) {
    std::map<Monomial, double> next;
    for (const auto& [mono, coef] : poly)
      for (const auto& [qm, qc] : q) {
        Monomial prod = mono;
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] += qm[i];
        next[prod] += coef * qc;
      }
    poly = std::move(next);
  }
  double sum = 0.0;
  for (const auto& entry : poly) sum += std::abs(entry.second);
  return sum;
}

WeylIdentityReport weyl_multiply_identities_check(const MidpointSymbol& g, double hbar, int n, int n1) {
  if (n < 0 || n1 < 0 || n % 2 != 0 || n1 % 2 != 0) throw Error(ErrorCode::Exponent, "identity orders must be even");
  const Grid1D& grid = g.x;
  const CMatrix base = weyl_matrix(g, hbar);
  auto residual = [](const CMatrix& lhs, const CMatrix& rhs) {
    const double scale = lhs.norm();
    const double diff = (lhs - rhs).norm();
    return scale > 0.0 ? diff / scale : diff;
  };
  auto right_x_power = [&](CMatrix a, int power) {
    if (power == 0) return a;
    for (std::size_t j = 0; j < grid.n_points; ++j) a.col(j) *= std::pow(grid.point(j), power);
    return a;
  };
  auto right_p_power = [&](const CMatrix& a, int power) {
    if (power == 0) return a;
    return right_momentum_multiply(a, grid, hbar, [power](double p) { return std::pow(p, power); });
  };

  WeylIdentityReport rep;
  MidpointSymbol sp = g;
  for (int i = 0; i < n; ++i) sp = symbol_times_p(sp, hbar);
  rep.identities.push_back({"weyl_times_p", residual(right_p_power(base, n), weyl_matrix(sp, hbar))});

  MidpointSymbol sx = g;
  for (int i = 0; i < n; ++i) sx = symbol_times_x(sx, hbar);
  rep.identities.push_back({"weyl_times_x", residual(right_x_power(base, n), weyl_matrix(sx, hbar))});

  MidpointSymbol sxp = g;
  for (int i = 0; i < n1; ++i) sxp = symbol_times_p(sxp, hbar);
  for (int i = 0; i < n; ++i) sxp = symbol_times_x(sxp, hbar);
  const CMatrix lhs_xp = right_x_power(right_p_power(base, n1), n);
  rep.identities.push_back({"weyl_times_p_x", residual(lhs_xp, weyl_matrix(sxp, hbar))});

  rep.coefficient_sum_p = expansion_coefficient_sum(1, n, 1.0);
  rep.coefficient_bound_p = std::pow(4.0, n);
  rep.coefficient_sum_x = expansion_coefficient_sum(1, n, 0.5);
  rep.coefficient_expected_x = std::pow(9.0 / 4.0, n / 2);
  return rep;
}

WeylIdentityReport weyl_multiply_identities_check(const PhaseSpaceField& f, double hbar, int n, int n1) {
  require_1d(f);
  if (n + n1 > 0) require_resolved(f);
  return weyl_multiply_identities_check(MidpointSymbol::interpolate(f), hbar, n, n1);
}

OperatorSymbolNorms operator_norm_vs_symbol(const PhaseSpaceField& f, double hbar) {
  require_1d(f);
  const DensityOperator op = weyl_quantize(f, hbar);
  OperatorSymbolNorms out;
  const Eigen::VectorXd ev = eigvalsh(op.matrix);
  out.raw_operator_norm = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  out.operator_norm = out.raw_operator_norm / planck(hbar);
  out.symbol_norm = weighted_sobolev_norm(f, WeightSpec{1, 0.0, std::numeric_limits<double>::infinity()});
  return out;
}

PsdRepair psd_repair(const DensityOperator& rho) {
  if (hermiticity_defect(rho.matrix) > 1e-8) throw Error(ErrorCode::NonHermitian, "PSD repair of a non-Hermitian matrix");
  const HermitianEigen e = eigh(rho.matrix);
  PsdRepair out;
  double kept = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (e.values[i] < 0.0) out.clipped_mass += -e.values[i];
    else kept += e.values[i];
  }
  if (!(kept > 0.0)) throw Error(ErrorCode::NotPsd, "no positive spectrum left after clipping");
  const double scale = 1.0 / kept;
  CMatrix m = apply_spectral(e, [scale](double l) { return l > 0.0 ? l * scale : 0.0; });
  m = 0.5 * (m + m.adjoint()).eval();
  out.state = DensityOperator(rho.grid, rho.hbar, std::move(m));
  return out;
}

CMatrix translate(const CMatrix& m, long cells) {
  const long n = static_cast<long>(m.rows());
  CMatrix out(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) out(((i + cells) % n + n) % n, ((j + cells) % n + n) % n) = m(i, j);
  return out;
}

}  // namespace semiclab
