#include "semiclab/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "semiclab/error.hpp"
#include "semiclab/fft.hpp"

namespace semiclab {

namespace {

using fft::Complex;

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// f(., y) <- f(. - s(idx), y) along one axis of a real row-major array, by Fourier phase shift.
void shift_axis(std::vector<double>& values, const std::vector<std::size_t>& shape, std::size_t axis, const Grid1D& g,
                const std::function<double(std::size_t)>& displacement) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t n = shape[axis];
  std::vector<Complex> c(values.begin(), values.end());
  fft::transform_axis(c.data(), outer, n, inner, fft::kForward);
  const std::vector<double> k = g.wavenumbers();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const double s = displacement(o * n * inner + in);
      if (std::abs(s) > 0.5 * g.length) throw Error(ErrorCode::Aliasing, "advection displacement exceeds half the periodic box");
      if (s == 0.0) continue;
      for (std::size_t m = 0; m < n; ++m) c[(o * n + m) * inner + in] *= std::polar(1.0, -k[m] * s);
    }
  fft::transform_axis(c.data(), outer, n, inner, fft::kBackward);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = c[i].real() * scale;
}

std::vector<std::vector<double>> spatial_gradient(const std::vector<double>& rho, const Grid1D& x, int d) {
  const std::size_t n = x.n_points;
  std::vector<std::vector<double>> out;
  if (d == 1) {
    out.push_back(derivative_1d(rho, x.length, 1));
    return out;
  }
  const std::vector<double> k = x.wavenumbers();
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<Complex> c(rho.begin(), rho.end());
    const std::size_t outer = axis == 0 ? 1 : n, inner = axis == 0 ? n : 1;
    fft::transform_axis(c.data(), outer, n, inner, fft::kForward);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t m = axis == 0 ? i : j;
        c[i * n + j] *= (m == n / 2) ? Complex(0.0) : Complex(0.0, k[m]);
      }
    fft::transform_axis(c.data(), outer, n, inner, fft::kBackward);
    std::vector<double> g(n * n);
    for (std::size_t i = 0; i < n * n; ++i) g[i] = c[i].real() / static_cast<double>(n);
    out.push_back(std::move(g));
  }
  return out;
}

// Max |d_b F_a| by central differences (one-sided at the box edges).
double difference_gradient_sup(const std::vector<std::vector<double>>& force, const Grid1D& x, int d) {
  const std::size_t n = x.n_points;
  const double h = x.spacing();
  double sup = 0.0;
  for (const auto& comp : force) {
    if (comp.empty()) continue;
    for (std::size_t idx = 0; idx < comp.size(); ++idx)
      for (int b = 0; b < d; ++b) {
        const std::size_t stride = (d == 2 && b == 0) ? n : 1;
        const std::size_t pos = (idx / stride) % n;
        const std::size_t lo = pos == 0 ? idx : idx - stride;
        const std::size_t hi = pos + 1 == n ? idx : idx + stride;
        const double span = static_cast<double>((hi - lo) / stride) * h;
        sup = std::max(sup, std::abs(comp[hi] - comp[lo]) / span);
      }
  }
  return sup;
}

double sum_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double max_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

ExternalField harmonic_field(int d, const Grid1D& x, double omega) {
  ExternalField e;
  const std::size_t n = x.n_points;
  const double w2 = omega * omega;
  e.force.assign(d, {});
  if (d == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      e.potential.push_back(0.5 * w2 * x.point(i) * x.point(i));
      e.force[0].push_back(-w2 * x.point(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        e.potential.push_back(0.5 * w2 * (x.point(i) * x.point(i) + x.point(j) * x.point(j)));
        e.force[0].push_back(-w2 * x.point(i));
        e.force[1].push_back(-w2 * x.point(j));
      }
  }
  return e;
}

// ---------------------------------------------------------------- Vlasov

VlasovSolver::VlasovSolver(const PhaseSpaceGrid& grid, const KernelSpec& k, ExternalField external)
    : grid_(grid), field_(k, grid.x), external_(std::move(external)) {
  if (k.d != grid.dim) throw Error(ErrorCode::Dimension, "kernel dimension differs from the phase-space grid");
  const std::size_t ns = grid.spatial_size();
  if (!external_.potential.empty() && external_.potential.size() != ns)
    throw Error(ErrorCode::GridMismatch, "external potential does not match the spatial grid");
  if (!external_.force.empty()) {
    if (external_.force.size() != static_cast<std::size_t>(grid.dim)) throw Error(ErrorCode::Dimension, "external force needs one array per axis");
    for (const auto& c : external_.force)
      if (c.size() != ns) throw Error(ErrorCode::GridMismatch, "external force does not match the spatial grid");
  }
}

void VlasovSolver::transport(PhaseSpaceField& f, double tau) const {
  const int d = grid_.dim;
  const std::size_t n = grid_.xi.n_points;
  const std::vector<std::size_t> shape = grid_.shape();
  for (int a = 0; a < d; ++a) {
    // Momentum index of axis a sits at stride n^{d-1-a} within the trailing momentum block.
    const std::size_t stride = ipow(n, d - 1 - a);
    shift_axis(f.values, shape, a, grid_.x, [&](std::size_t idx) { return grid_.xi.point((idx / stride) % n) * tau; });
  }
}

void VlasovSolver::kick(PhaseSpaceField& f, double tau) const {
  const int d = grid_.dim;
  const std::size_t nm = grid_.momentum_size();
  const std::vector<std::vector<double>> e = force(f);
  const std::vector<std::size_t> shape = grid_.shape();
  for (int a = 0; a < d; ++a)
    shift_axis(f.values, shape, d + a, grid_.xi, [&](std::size_t idx) { return e[a][idx / nm] * tau; });
}

std::vector<std::vector<double>> VlasovSolver::force(const PhaseSpaceField& f) const {
  const std::vector<double> rho = spatial_density(f);
  std::vector<std::vector<double>> e = field_.kernel().is_off()
                                           ? std::vector<std::vector<double>>(grid_.dim, std::vector<double>(rho.size(), 0.0))
                                           : field_.force(rho);
  if (!external_.force.empty())
    for (int a = 0; a < grid_.dim; ++a)
      for (std::size_t i = 0; i < rho.size(); ++i) e[a][i] += external_.force[a][i];
  return e;
}

std::vector<double> VlasovSolver::potential(const PhaseSpaceField& f) const {
  const std::vector<double> rho = spatial_density(f);
  std::vector<double> v = field_.kernel().is_off() ? std::vector<double>(rho.size(), 0.0) : field_.potential(rho);
  if (!external_.potential.empty())
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += external_.potential[i];
  return v;
}

double VlasovSolver::energy(const PhaseSpaceField& f) const {
  const int d = grid_.dim;
  const std::size_t nm = grid_.momentum_size(), n = grid_.xi.n_points;
  double kinetic = 0.0;
  for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
    std::size_t m = idx % nm;
    double p2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double xi = grid_.xi.point(m % n);
      p2 += xi * xi;
      m /= n;
    }
    kinetic += 0.5 * p2 * f.values[idx];
  }
  kinetic *= grid_.cell_volume();
  const std::vector<double> rho = spatial_density(f);
  const std::vector<double> vmf = field_.kernel().is_off() ? std::vector<double>(rho.size(), 0.0) : field_.potential(rho);
  double interaction = 0.0, external = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    interaction += 0.5 * vmf[i] * rho[i];
    if (!external_.potential.empty()) external += external_.potential[i] * rho[i];
  }
  return kinetic + (interaction + external) * grid_.spatial_cell();
}

void VlasovSolver::step(PhaseSpaceField& f, double dt) const { advance(f, dt, 1); }

void VlasovSolver::advance(PhaseSpaceField& f, double dt, int steps) const {
  if (steps <= 0) return;
  transport(f, 0.5 * dt);
  for (int s = 0; s < steps; ++s) {
    kick(f, dt);
    transport(f, s + 1 == steps ? 0.5 * dt : dt);
  }
  f.time += dt * steps;
}

PhaseSpaceField vlasov_step(const PhaseSpaceField& f, const KernelSpec& k, double dt) {
  PhaseSpaceField out = f;
  VlasovSolver(f.grid, k).step(out, dt);
  return out;
}

// ---------------------------------------------------------------- Hartree / Hartree-Fock

HartreeSolver::HartreeSolver(const Grid1D& grid, double hbar, const KernelSpec& k, bool exchange, std::vector<double> external_potential)
    : grid_(grid), hbar_(hbar), field_(k, grid), exchange_(exchange), external_(std::move(external_potential)) {
  if (k.d != 1) throw Error(ErrorCode::Dimension, "density-matrix propagators are one-dimensional");
  if (!(hbar > 0.0)) throw Error(ErrorCode::Config, "hbar must be positive");
  if (!external_.empty() && external_.size() != grid.n_points) throw Error(ErrorCode::GridMismatch, "external potential does not match the grid");
  if (exchange_) {
    const std::size_t n = grid.n_points;
    kernel_table_.resize(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) kernel_table_(i, j) = k.value(std::abs(grid.point(i) - grid.point(j)));
  }
}

void HartreeSolver::kinetic(CMatrix& m, double tau) const {
  const std::size_t n = grid_.n_points;
  if (hbar_ * grid_.nyquist() * std::abs(tau) > 0.5 * grid_.length)
    throw Error(ErrorCode::Aliasing, "kinetic step moves the fastest resolved momentum past half the box");
  // Column index i carries e^{-i k x_i}, row index j carries e^{+i k x_j}.
  fft::transform_axis(m.data(), n, n, 1, fft::kForward);
  fft::transform_axis(m.data(), 1, n, n, fft::kBackward);
  std::vector<Complex> phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = grid_.wavenumber(i);
    phase[i] = std::polar(1.0, -0.5 * hbar_ * k * k * tau);
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) m(i, j) *= phase[i] * std::conj(phase[j]);
  fft::transform_axis(m.data(), n, n, 1, fft::kBackward);
  fft::transform_axis(m.data(), 1, n, n, fft::kForward);
  m /= static_cast<double>(n * n);
}

std::vector<double> HartreeSolver::potential(const DensityOperator& rho) const {
  const std::vector<double> density = rho.density();
  std::vector<double> v = field_.kernel().is_off() ? std::vector<double>(density.size(), 0.0) : field_.potential(density);
  if (!external_.empty())
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += external_[i];
  return v;
}

CMatrix HartreeSolver::exchange_operator(const DensityOperator& rho) const {
  if (!exchange_) return semiclab::exchange_operator(rho, field_.kernel());
  return (kernel_table_.cast<Complex>().array() * rho.matrix.array()).matrix();
}

void HartreeSolver::interaction(CMatrix& m, double tau) const {
  const std::size_t n = grid_.n_points;
  if (!exchange_) {
    const std::vector<double> v = potential(DensityOperator(grid_, hbar_, m));
    std::vector<Complex> phase(n);
    for (std::size_t i = 0; i < n; ++i) phase[i] = std::polar(1.0, -v[i] * tau / hbar_);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) m(i, j) *= phase[i] * std::conj(phase[j]);
    return;
  }
  // Exchange makes the interaction generator state dependent: explicit midpoint keeps the splitting second order.
  const auto evolve = [&](const CMatrix& generator_state, const CMatrix& target, double t) {
    const DensityOperator cur(grid_, hbar_, generator_state);
    const std::vector<double> pot = potential(cur);
    CMatrix h = -exchange_operator(cur);
    for (std::size_t i = 0; i < n; ++i) h(i, i) += pot[i];
    if (hermiticity_defect(h) > 1e-8) throw Error(ErrorCode::NonHermitian, "Hartree-Fock interaction is not Hermitian");
    h = 0.5 * (h + h.adjoint()).eval();
    const HermitianEigen e = eigh(h);
    Eigen::VectorXcd phase(n);
    for (std::size_t i = 0; i < n; ++i) phase[i] = std::polar(1.0, -e.values[i] * t / hbar_);
    CMatrix out = spectral_conjugate(e, phase, target);
    return CMatrix(0.5 * (out + out.adjoint()));
  };
  const CMatrix mid = evolve(m, m, 0.5 * tau);
  m = evolve(mid, m, tau);
}

void HartreeSolver::step(DensityOperator& rho, double dt) const { advance(rho, dt, 1); }

void HartreeSolver::advance(DensityOperator& rho, double dt, int steps) const {
  if (rho.grid != grid_) throw Error(ErrorCode::GridMismatch, "density operator lives on a different grid");
  if (steps <= 0) return;
  kinetic(rho.matrix, 0.5 * dt);
  for (int s = 0; s < steps; ++s) {
    interaction(rho.matrix, dt);
    kinetic(rho.matrix, s + 1 == steps ? 0.5 * dt : dt);
  }
}

double HartreeSolver::kinetic_energy(const DensityOperator& rho) const {
  const std::size_t n = grid_.n_points;
  CMatrix m = rho.matrix;
  fft::transform_axis(m.data(), n, n, 1, fft::kForward);
  fft::transform_axis(m.data(), 1, n, n, fft::kBackward);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = hbar_ * grid_.wavenumber(i);
    acc += 0.5 * p * p * m(i, i).real();
  }
  return acc / static_cast<double>(n);
}

double HartreeSolver::energy(const DensityOperator& rho) const {
  const std::vector<double> density = rho.density();
  const std::vector<double> vmf = field_.kernel().is_off() ? std::vector<double>(density.size(), 0.0) : field_.potential(density);
  double pot = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    pot += 0.5 * vmf[i] * density[i];
    if (!external_.empty()) pot += external_[i] * density[i];
  }
  double e = kinetic_energy(rho) + pot * grid_.spacing();
  if (exchange_) e -= 0.5 * (exchange_operator(rho).array() * rho.matrix.transpose().array()).sum().real();
  return e;
}

DensityOperator hartree_step(const DensityOperator& rho, const KernelSpec& k, double dt) {
  DensityOperator out = rho;
  HartreeSolver(rho.grid, rho.hbar, k, false).step(out, dt);
  return out;
}

DensityOperator hartree_fock_step(const DensityOperator& rho, const KernelSpec& k, double dt) {
  DensityOperator out = rho;
  HartreeSolver(rho.grid, rho.hbar, k, true).step(out, dt);
  return out;
}

CMatrix exchange_operator(const DensityOperator& rho, const KernelSpec& k) {
  if (k.d != 1) throw Error(ErrorCode::Dimension, "exchange operator is one-dimensional");
  k.validate(rho.grid.spacing());
  const std::size_t n = rho.size();
  CMatrix x(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) x(i, j) = k.value(std::abs(rho.grid.point(i) - rho.grid.point(j))) * rho.matrix(i, j);
  return x;
}

// ---------------------------------------------------------------- B_t

namespace {

CMatrix bracket_times(const DensityOperator& f_op, const std::vector<double>& v, const std::vector<double>& w_grid,
                      const std::vector<double>& w_half) {
  const std::size_t n = f_op.size();
  CMatrix b(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = i + j;
      const double w = (s % 2 == 0) ? w_grid[s / 2] : w_half[s / 2];
      const double diff = f_op.grid.point(i) - f_op.grid.point(j);
      b(i, j) = (v[i] - v[j] - w * diff) * f_op.matrix(i, j);
    }
  return b;
}

}  // namespace

CMatrix b_t_operator(const DensityOperator& f_op, const std::vector<double>& rho_f, const KernelSpec& k) {
  if (rho_f.size() != f_op.size()) throw Error(ErrorCode::GridMismatch, "density does not match the operator grid");
  const std::size_t n = f_op.size();
  if (k.is_off()) return CMatrix::Zero(n, n);
  const MeanField field(k, f_op.grid);
  const std::vector<double> v = field.potential(rho_f);
  std::vector<double> w = field.force_component(rho_f, 0), w_half = field.force_half_shift(rho_f);
  for (double& x : w) x = -x;
  for (double& x : w_half) x = -x;
  return bracket_times(f_op, v, w, w_half);
}

CMatrix b_t_operator(const DensityOperator& f_op, const std::function<double(double)>& v, const std::function<double(double)>& w) {
  const std::size_t n = f_op.size();
  const Grid1D& g = f_op.grid;
  std::vector<double> vv(n), wg(n), wh(n);
  for (std::size_t i = 0; i < n; ++i) {
    vv[i] = v(g.point(i));
    wg[i] = w(g.point(i));
    wh[i] = w(g.point(i) + 0.5 * g.spacing());
  }
  return bracket_times(f_op, vv, wg, wh);
}

// ---------------------------------------------------------------- moments

MomentSample moment_monitor_step(const PhaseSpaceField& f, const VlasovSolver& solver, double p, double n) {
  require_resolved(f);
  const PhaseSpaceGrid& g = f.grid;
  const int d = g.dim;
  const std::size_t total = f.values.size();
  std::vector<double> weight(total);
  for (std::size_t i = 0; i < total; ++i) weight[i] = std::pow(japanese_bracket(g, i), n * p);

  std::vector<double> gx(total, 0.0), gxi(total, 0.0);
  for (int a = 0; a < d; ++a) {
    const std::vector<double> dx = spectral_derivative(f, a, 1);
    const std::vector<double> dxi = spectral_derivative(f, d + a, 1);
    for (std::size_t i = 0; i < total; ++i) {
      gx[i] += dx[i] * dx[i];
      gxi[i] += dxi[i] * dxi[i];
    }
  }
  MomentSample s;
  s.time = f.time;
  const double cell = g.cell_volume();
  for (std::size_t i = 0; i < total; ++i) {
    s.m_x += std::pow(std::sqrt(gx[i]), p) * weight[i];
    s.m_xi += std::pow(std::sqrt(gxi[i]), p) * weight[i];
  }
  s.m_x *= cell;
  s.m_xi *= cell;
  for (int a = 0; a < 2 * d; ++a)
    for (int b = a; b < 2 * d; ++b) {
      std::vector<int> orders(2 * d, 0);
      orders[a] += 1;
      orders[b] += 1;
      const std::vector<double> second = spectral_mixed_derivative(f, orders);
      double acc = 0.0;
      for (std::size_t i = 0; i < total; ++i) acc += std::pow(std::abs(second[i]), p) * weight[i];
      s.m_2 += acc * cell;
    }

  const std::vector<std::vector<double>> e = solver.force(f);
  for (std::size_t i = 0; i < e[0].size(); ++i) {
    double sq = 0.0;
    for (int a = 0; a < d; ++a) sq += e[a][i] * e[a][i];
    s.e_sup = std::max(s.e_sup, std::sqrt(sq));
  }
  const std::vector<double> rho = spatial_density(f);
  const std::vector<std::vector<double>> grad_rho = spatial_gradient(rho, g.x, d);
  if (!solver.mean_field().kernel().is_off())
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s.grad_e_sup = std::max(s.grad_e_sup, max_abs(solver.mean_field().force_component(grad_rho[b], a)));
  if (!solver.external().force.empty())
    s.grad_e_sup += difference_gradient_sup(solver.external().force, g.x, d);

  double grad_rho_sup = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double sq = 0.0;
    for (int a = 0; a < d; ++a) sq += grad_rho[a][i] * grad_rho[a][i];
    grad_rho_sup = std::max(grad_rho_sup, std::sqrt(sq));
  }
  const double c_t = sum_abs(rho) * g.spatial_cell() + max_abs(rho);
  s.j = c_t * (1.0 + std::log1p(grad_rho_sup));
  s.rate_bound = p * (0.5 * n * (1.0 + s.e_sup) + std::max(1.0, s.grad_e_sup));
  return s;
}

MomentEnvelope moment_envelope(const std::vector<MomentSample>& samples, double p, double n) {
  MomentEnvelope env;
  if (samples.empty()) return env;
  const MomentSample& s0 = samples.front();
  env.fitted_c = s0.j > 0.0 ? s0.rate_bound / (p * (1.0 + n) * s0.j) : 0.0;
  const double log0 = std::log(s0.m_x + s0.m_xi);
  double int_j = 0.0, int_rate = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (k > 0) {
      const double dt = samples[k].time - samples[k - 1].time;
      int_j += 0.5 * dt * (samples[k].j + samples[k - 1].j);
      int_rate += 0.5 * dt * (samples[k].rate_bound + samples[k - 1].rate_bound);
    }
    const double lm = std::log(samples[k].m_x + samples[k].m_xi);
    env.log_moment.push_back(lm);
    env.envelope.push_back(log0 + env.fitted_c * p * (1.0 + n) * int_j);
    env.rigorous.push_back(log0 + int_rate);
    if (lm > env.envelope.back()) env.respected = false;
  }
  return env;
}

}  // namespace semiclab
