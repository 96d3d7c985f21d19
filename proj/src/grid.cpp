#include "semiclab/grid.hpp"

#include <cmath>
#include <numbers>

#include "semiclab/error.hpp"

namespace semiclab {

namespace {
bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }
}  // namespace

Grid1D::Grid1D(std::size_t n, double len) : n_points(n), length(len) {
  if (!is_power_of_two(n)) throw Error(ErrorCode::Config, "grid size must be a power of two >= 2");
  if (!(len > 0.0) || !std::isfinite(len)) throw Error(ErrorCode::Config, "grid length must be positive");
}

double Grid1D::wavenumber(std::size_t i) const {
  const double dk = 2.0 * std::numbers::pi / length;
  const auto half = n_points / 2;
  return i < half ? dk * static_cast<double>(i) : dk * (static_cast<double>(i) - static_cast<double>(n_points));
}

double Grid1D::nyquist() const { return std::numbers::pi / spacing(); }

std::vector<double> Grid1D::points() const {
  std::vector<double> out(n_points);
  for (std::size_t i = 0; i < n_points; ++i) out[i] = point(i);
  return out;
}

std::vector<double> Grid1D::wavenumbers() const {
  std::vector<double> out(n_points);
  for (std::size_t i = 0; i < n_points; ++i) out[i] = wavenumber(i);
  return out;
}

bool Grid1D::operator==(const Grid1D& other) const {
  return n_points == other.n_points && std::abs(length - other.length) <= 1e-12 * std::abs(length);
}

Grid1D conjugate_grid(const Grid1D& x, double hbar) {
  if (!(hbar > 0.0)) throw Error(ErrorCode::Config, "hbar must be positive");
  return Grid1D(x.n_points, std::numbers::pi * hbar / x.spacing());
}

bool is_conjugate(const Grid1D& x, const Grid1D& xi, double hbar) {
  if (x.n_points != xi.n_points) return false;
  const double want = std::numbers::pi * hbar / x.spacing();
  return std::abs(xi.length - want) <= 1e-12 * want;
}

PhaseSpaceGrid::PhaseSpaceGrid(int d, Grid1D xg, Grid1D xig) : dim(d), x(xg), xi(xig) {
  if (d != 1 && d != 2) throw Error(ErrorCode::Dimension, "phase-space fields support d = 1 or 2");
}

std::size_t PhaseSpaceGrid::spatial_size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= x.n_points;
  return s;
}

std::size_t PhaseSpaceGrid::momentum_size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= xi.n_points;
  return s;
}

double PhaseSpaceGrid::spatial_cell() const { return std::pow(x.spacing(), dim); }
double PhaseSpaceGrid::momentum_cell() const { return std::pow(xi.spacing(), dim); }

std::vector<std::size_t> PhaseSpaceGrid::shape() const {
  std::vector<std::size_t> s;
  for (int a = 0; a < dim; ++a) s.push_back(x.n_points);
  for (int a = 0; a < dim; ++a) s.push_back(xi.n_points);
  return s;
}

bool PhaseSpaceGrid::operator==(const PhaseSpaceGrid& other) const {
  return dim == other.dim && x == other.x && xi == other.xi;
}

}  // namespace semiclab
