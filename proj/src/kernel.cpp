#include "semiclab/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "semiclab/error.hpp"

namespace semiclab {

double KernelSpec::b() const { return static_cast<double>(d) / (a + 1.0); }

double KernelSpec::b_conjugate() const {
  const double bb = b();
  return bb / (bb - 1.0);
}

double KernelSpec::value(double r) const {
  if (is_off()) return 0.0;
  const double s = r * r + softening * softening;
  if (logarithmic) return strength * 0.5 * std::log(s);
  if (a == 0.0) return strength;
  if (s == 0.0) {
    if (a < 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  return strength * std::pow(s, -0.5 * a);
}

double KernelSpec::radial_factor(double r) const {
  if (is_off()) return 0.0;
  const double s = r * r + softening * softening;
  if (logarithmic) return s == 0.0 ? 0.0 : strength / s;
  if (a == 0.0 || s == 0.0) return 0.0;
  return -strength * a * std::pow(s, -0.5 * a - 1.0);
}

void KernelSpec::validate(double spacing) const {
  if (d < 1 || d > 2) throw Error(ErrorCode::Dimension, "kernels are sampled for d = 1 or 2");
  if (!logarithmic && !(a > -1.0 && a < d)) throw Error(ErrorCode::Exponent, "kernel exponent must lie in (-1, d)");
  if (logarithmic && a != 0.0) throw Error(ErrorCode::Exponent, "logarithmic kernels use a = 0");
  if (softening < 0.0) throw Error(ErrorCode::Config, "softening must be nonnegative");
  if (!is_off() && needs_softening() && softening < spacing * (1.0 - 1e-12))
    throw Error(ErrorCode::Singularity, "kernel singularity is not resolved: softening below grid spacing");
}

double default_softening(const KernelSpec& k, double spacing) { return k.needs_softening() ? 2.0 * spacing : 0.0; }

namespace {

// Signed offset of padded index m on a 2n periodic lattice; m = n is unused by linear convolution.
long padded_offset(std::size_t m, std::size_t n) {
  return m < n ? static_cast<long>(m) : static_cast<long>(m) - 2 * static_cast<long>(n);
}

// Origin value for delta = 0 and a > 0: ball average d/(d-a) r0^{-a} over the equal-volume ball.
double origin_cell_value(const KernelSpec& k, double spacing) {
  const double r0 = k.d == 1 ? 0.5 * spacing : spacing / std::sqrt(std::numbers::pi);
  return k.strength * k.d / (k.d - k.a) * std::pow(r0, -k.a);
}

double sampled_value(const KernelSpec& k, double r, double spacing) {
  if (r == 0.0 && k.softening == 0.0 && !k.logarithmic && k.a > 0.0 && !k.is_off()) return origin_cell_value(k, spacing);
  return k.value(r);
}

}  // namespace

std::vector<double> kernel_eval(const KernelSpec& k, const Grid1D& x) {
  k.validate(x.spacing());
  const std::size_t n = x.n_points;
  std::vector<double> out;
  if (k.d == 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampled_value(k, std::abs(x.point(i)), x.spacing()));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.push_back(sampled_value(k, std::hypot(x.point(i), x.point(j)), x.spacing()));
  }
  return out;
}

std::vector<std::vector<double>> kernel_gradient_eval(const KernelSpec& k, const Grid1D& x) {
  k.validate(x.spacing());
  const std::size_t n = x.n_points;
  std::vector<std::vector<double>> out(k.d);
  if (k.d == 1) {
    for (std::size_t i = 0; i < n; ++i) out[0].push_back(k.radial_factor(std::abs(x.point(i))) * x.point(i));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double w = k.radial_factor(std::hypot(x.point(i), x.point(j)));
        out[0].push_back(w * x.point(i));
        out[1].push_back(w * x.point(j));
      }
  }
  return out;
}

MeanField::MeanField(const KernelSpec& k, const Grid1D& x) : kernel_(k), grid_(x), padded_n_(2 * x.n_points) {
  k.validate(x.spacing());
  const std::size_t n = x.n_points, m = padded_n_;
  const double h = x.spacing();
  const std::size_t total = k.d == 1 ? m : m * m;
  std::vector<double> pot(total, 0.0), abs_grad(total, 0.0);
  std::vector<std::vector<double>> grad(k.d, std::vector<double>(total, 0.0));
  for (std::size_t idx = 0; idx < total; ++idx) {
    const std::size_t i = k.d == 1 ? idx : idx / m;
    const std::size_t j = k.d == 1 ? 0 : idx % m;
    if (i == n || (k.d == 2 && j == n)) continue;
    const double y0 = padded_offset(i, n) * h;
    const double y1 = k.d == 2 ? padded_offset(j, n) * h : 0.0;
    const double r = std::hypot(y0, y1);
    pot[idx] = sampled_value(k, r, h);
    const double w = k.radial_factor(r);
    grad[0][idx] = w * y0;
    if (k.d == 2) grad[1][idx] = w * y1;
    abs_grad[idx] = std::abs(w) * r;
  }
  potential_hat_ = padded_transform(pot);
  for (const auto& g : grad) gradient_hat_.push_back(padded_transform(g));
  abs_gradient_hat_ = padded_transform(abs_grad);
  if (k.d == 1) {
    std::vector<double> half(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (i == n) continue;
      const double y = (padded_offset(i, n) + 0.5) * h;
      half[i] = k.radial_factor(std::abs(y)) * y;
    }
    half_gradient_hat_ = padded_transform(half);
  }
}

std::size_t MeanField::spatial_size() const { return kernel_.d == 1 ? grid_.n_points : grid_.n_points * grid_.n_points; }

std::vector<fft::Complex> MeanField::padded_transform(const std::vector<double>& padded) const {
  std::vector<fft::Complex> c(padded.begin(), padded.end());
  const std::size_t m = padded_n_;
  if (kernel_.d == 1) {
    fft::transform_axis(c.data(), 1, m, 1, fft::kForward);
  } else {
    fft::transform_axis(c.data(), 1, m, m, fft::kForward);
    fft::transform_axis(c.data(), m, m, 1, fft::kForward);
  }
  return c;
}

std::vector<double> MeanField::convolve(const std::vector<fft::Complex>& kernel_hat, const std::vector<double>& g) const {
  const std::size_t n = grid_.n_points, m = padded_n_;
  if (g.size() != spatial_size()) throw Error(ErrorCode::GridMismatch, "spatial array does not match the mean-field grid");
  std::vector<double> padded(kernel_hat.size(), 0.0);
  if (kernel_.d == 1) {
    std::copy(g.begin(), g.end(), padded.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) padded[i * m + j] = g[i * n + j];
  }
  std::vector<fft::Complex> c = padded_transform(padded);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= kernel_hat[i];
  if (kernel_.d == 1) {
    fft::transform_axis(c.data(), 1, m, 1, fft::kBackward);
  } else {
    fft::transform_axis(c.data(), 1, m, m, fft::kBackward);
    fft::transform_axis(c.data(), m, m, 1, fft::kBackward);
  }
  const double cell = kernel_.d == 1 ? grid_.spacing() : grid_.spacing() * grid_.spacing();
  const double scale = cell / static_cast<double>(c.size());
  std::vector<double> out(spatial_size());
  if (kernel_.d == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i].real() * scale;
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = c[i * m + j].real() * scale;
  }
  return out;
}

std::vector<double> MeanField::potential(const std::vector<double>& rho) const { return convolve(potential_hat_, rho); }

std::vector<std::vector<double>> MeanField::force(const std::vector<double>& rho) const {
  std::vector<std::vector<double>> out;
  for (int axis = 0; axis < kernel_.d; ++axis) out.push_back(force_component(rho, axis));
  return out;
}

std::vector<double> MeanField::force_component(const std::vector<double>& g, int axis) const {
  std::vector<double> out = convolve(gradient_hat_[axis], g);
  for (double& v : out) v = -v;
  return out;
}

std::vector<double> MeanField::force_half_shift(const std::vector<double>& g) const {
  if (kernel_.d != 1) throw Error(ErrorCode::Dimension, "half-shifted force is available for d = 1");
  std::vector<double> out = convolve(half_gradient_hat_, g);
  for (double& v : out) v = -v;
  return out;
}

std::vector<double> MeanField::abs_gradient_convolve(const std::vector<double>& g) const { return convolve(abs_gradient_hat_, g); }

}  // namespace semiclab
