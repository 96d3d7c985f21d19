#pragma once

#include <vector>

#include "semiclab/fft.hpp"
#include "semiclab/grid.hpp"

namespace semiclab {

// K(x) = strength / (|x|^2 + delta^2)^{a/2}, or strength * ln sqrt(|x|^2 + delta^2) when logarithmic.
struct KernelSpec {
  int d = 1;
  double a = 0.5;
  bool logarithmic = false;
  double strength = 1.0;  // +1 repulsive, -1 attractive, 0 switches the interaction off
  double softening = 0.0;  // negative: resolved per grid to default_softening

  double b() const;            // d / (a + 1)
  double b_conjugate() const;  // b / (b - 1)
  bool is_off() const { return strength == 0.0; }
  // Singular cases (a >= d - 2) need softening at least one grid spacing.
  bool needs_softening() const { return logarithmic || a >= d - 2; }

  double value(double r) const;
  // dK/dr divided by r, so grad K(x) = radial_factor(|x|) x.
  double radial_factor(double r) const;
  // Throws SINGULARITY_ERROR when the origin is unresolved on a grid of this spacing.
  void validate(double spacing) const;
};

// Default softening: two cells for singular exponents, none otherwise.
double default_softening(const KernelSpec& k, double spacing);

// K sampled at the spatial grid points (d = 1: n values; d = 2: n*n row-major).
std::vector<double> kernel_eval(const KernelSpec& k, const Grid1D& x);
// Components of grad K at the grid points, one array per axis.
std::vector<std::vector<double>> kernel_gradient_eval(const KernelSpec& k, const Grid1D& x);

// Free-space convolutions on a d-dimensional spatial grid by zero padding to 2n per axis.
class MeanField {
 public:
  MeanField(const KernelSpec& k, const Grid1D& x);

  const KernelSpec& kernel() const { return kernel_; }
  const Grid1D& grid() const { return grid_; }
  std::size_t spatial_size() const;

  // V = K * rho.
  std::vector<double> potential(const std::vector<double>& rho) const;
  // E = -grad K * rho, one array per axis.
  std::vector<std::vector<double>> force(const std::vector<double>& rho) const;
  // Linear convolution of an arbitrary spatial array with -(d K / d x_axis).
  std::vector<double> force_component(const std::vector<double>& g, int axis) const;
  // d = 1: -(K' * g) evaluated at x_i + dx/2.
  std::vector<double> force_half_shift(const std::vector<double>& g) const;
  // Convolution with |grad K|.
  std::vector<double> abs_gradient_convolve(const std::vector<double>& g) const;

 private:
  std::vector<double> convolve(const std::vector<fft::Complex>& kernel_hat, const std::vector<double>& g) const;
  std::vector<fft::Complex> padded_transform(const std::vector<double>& padded) const;

  KernelSpec kernel_;
  Grid1D grid_;
  std::size_t padded_n_ = 0;
  std::vector<fft::Complex> potential_hat_;
  std::vector<std::vector<fft::Complex>> gradient_hat_;
  std::vector<fft::Complex> abs_gradient_hat_;
  std::vector<fft::Complex> half_gradient_hat_;
};

}  // namespace semiclab
