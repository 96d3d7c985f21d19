#pragma once

#include <cstddef>
#include <vector>

namespace semiclab {

// Centered periodic grid on [-L/2, L/2) with n = 2^k points.
struct Grid1D {
  std::size_t n_points = 0;
  double length = 0.0;
  bool periodic = true;

  Grid1D() = default;
  Grid1D(std::size_t n, double length);

  double spacing() const { return length / static_cast<double>(n_points); }
  double point(std::size_t i) const { return -0.5 * length + static_cast<double>(i) * spacing(); }
  // Angular wavenumber of FFT slot i; the Nyquist slot carries -pi/spacing.
  double wavenumber(std::size_t i) const;
  double nyquist() const;
  std::vector<double> points() const;
  std::vector<double> wavenumbers() const;

  bool operator==(const Grid1D& other) const;
  bool operator!=(const Grid1D& other) const { return !(*this == other); }
};

// Momentum grid paired with x for Weyl/Wigner transforms: same size, spacing pi*hbar/L.
Grid1D conjugate_grid(const Grid1D& x, double hbar);
bool is_conjugate(const Grid1D& x, const Grid1D& xi, double hbar);

// Isotropic phase-space grid: every x axis shares `x`, every momentum axis shares `xi`.
struct PhaseSpaceGrid {
  int dim = 1;
  Grid1D x;
  Grid1D xi;

  PhaseSpaceGrid() = default;
  PhaseSpaceGrid(int dim, Grid1D x, Grid1D xi);

  std::size_t spatial_size() const;
  std::size_t momentum_size() const;
  std::size_t size() const { return spatial_size() * momentum_size(); }
  double spatial_cell() const;
  double momentum_cell() const;
  double cell_volume() const { return spatial_cell() * momentum_cell(); }
  // Axis shape of the row-major value array: d x-axes followed by d momentum axes.
  std::vector<std::size_t> shape() const;

  bool operator==(const PhaseSpaceGrid& other) const;
  bool operator!=(const PhaseSpaceGrid& other) const { return !(*this == other); }
};

}  // namespace semiclab
