#pragma once

#include <complex>
#include <functional>
#include <map>
#include <vector>

#include "semiclab/grid.hpp"

namespace semiclab {

struct PhaseSpaceField {
  PhaseSpaceGrid grid;
  std::vector<double> values;  // row-major over grid.shape()
  double time = 0.0;

  PhaseSpaceField() = default;
  explicit PhaseSpaceField(PhaseSpaceGrid g, double t = 0.0);

  // Samples fn at every node; for d = 2 fn receives (x0, x1, xi0, xi1).
  static PhaseSpaceField sample(const PhaseSpaceGrid& g, const std::function<double(const double*)>& fn);

  double& at(std::size_t ix, std::size_t ik) { return values[ix * grid.momentum_size() + ik]; }
  double at(std::size_t ix, std::size_t ik) const { return values[ix * grid.momentum_size() + ik]; }
  double mass() const;
};

struct WeightSpec {
  int sobolev_order = 0;     // sigma
  double weight_power = 0.0;  // k in <z>^k
  double lebesgue_p = 2.0;    // p, may be +infinity
};

// rho_f(x) = dxi^d * sum_k f(x, xi_k).
std::vector<double> spatial_density(const PhaseSpaceField& f);

// ||<z>^k f||_p + ||<z>^k grad^sigma f||_p with the full derivative tensor norm.
double weighted_sobolev_norm(const PhaseSpaceField& f, const WeightSpec& w);

// Lorentz quasinorm from the decreasing rearrangement over cells of measure `cell`.
double lorentz_norm(const std::vector<double>& g, double cell, double p, double q);

// Discrete L^p norms over phase space for each requested p (infinity allowed).
std::map<double, double> phase_norms(const PhaseSpaceField& f, const std::vector<double>& p_list);
double lebesgue_norm(const std::vector<double>& v, double cell, double p);

// Sup of the band-limited trigonometric interpolant (Newton-refined from the sample max).
double interpolated_sup(const PhaseSpaceField& f);

// Fraction of spectral L2 mass beyond 2/3 of Nyquist on any axis.
double spectral_tail_fraction(const PhaseSpaceField& f);
// Throws RESOLUTION_ERROR when the tail fraction exceeds 1%.
void require_resolved(const PhaseSpaceField& f);

// Spectral derivative of the given order along phase-space axis `axis` (0..2d-1).
std::vector<double> spectral_derivative(const PhaseSpaceField& f, std::size_t axis, int order);
// Mixed derivative d^{orders[0]}_{axis0} d^{orders[1]}_{axis1} ... in one Fourier pass.
std::vector<double> spectral_mixed_derivative(const PhaseSpaceField& f, const std::vector<int>& orders);

// Spectral derivative / interpolation helpers on 1D periodic samples.
std::vector<double> derivative_1d(const std::vector<double>& v, double length, int order);
// Values at x_i + spacing/2 by Fourier half-shift (Nyquist mode dropped).
std::vector<double> half_shift_1d(const std::vector<double>& v);

// <z> = sqrt(1 + |x|^2 + |xi|^2) at flat index `idx`.
double japanese_bracket(const PhaseSpaceGrid& g, std::size_t idx);

}  // namespace semiclab
