#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semiclab/grid.hpp"
#include "semiclab/linalg.hpp"
#include "semiclab/phasespace.hpp"

namespace semiclab {

// Matrix M[i][j] = rho(x_i, x_j) * dx, so the matrix trace is the continuum trace.
struct DensityOperator {
  Grid1D grid;
  double hbar = 1.0;
  CMatrix matrix;

  DensityOperator() = default;
  DensityOperator(Grid1D g, double h);
  DensityOperator(Grid1D g, double h, CMatrix m);

  std::size_t size() const { return grid.n_points; }
  double trace() const { return matrix.trace().real(); }
  std::vector<double> density() const;  // rho(x_i, x_i)
};

// Planck constant h = 2 pi hbar.
double planck(double hbar);

// Complex symbol sampled on the midpoint lattice x_0 + m dx/2 (m = 0..2n-2) times the xi grid.
struct MidpointSymbol {
  Grid1D x;
  Grid1D xi;
  std::vector<Complex> values;  // row-major [m][k]

  MidpointSymbol() = default;
  MidpointSymbol(Grid1D xg, Grid1D xig);
  std::size_t rows() const { return 2 * x.n_points - 1; }
  std::size_t cols() const { return xi.n_points; }
  double row_point(std::size_t m) const { return x.point(0) + 0.5 * static_cast<double>(m) * x.spacing(); }
  Complex& at(std::size_t m, std::size_t k) { return values[m * cols() + k]; }
  Complex at(std::size_t m, std::size_t k) const { return values[m * cols() + k]; }

  // Odd rows by band-limited interpolation of the grid samples.
  static MidpointSymbol interpolate(const PhaseSpaceField& f);
  static MidpointSymbol from_function(const Grid1D& x, const Grid1D& xi, const std::function<Complex(double, double)>& fn);

  MidpointSymbol derivative_x(int order) const;   // spectral, on the doubled periodic lattice
  MidpointSymbol derivative_xi(int order) const;  // spectral along xi
  MidpointSymbol operator+(const MidpointSymbol& o) const;
  MidpointSymbol operator*(Complex c) const;
  // Pointwise multiplication by g(x, xi).
  MidpointSymbol times(const std::function<Complex(double, double)>& g) const;
  double l2_norm() const;  // over grid rows only (even m), phase-space quadrature
};

using SymbolFunction = std::function<double(double x, double xi)>;

// op_hbar(f): kernel dx dxi sum_k f((x_i+x_j)/2, xi_k) e^{i (x_i-x_j) xi_k / hbar}.
DensityOperator weyl_quantize(const PhaseSpaceField& f, double hbar);
DensityOperator weyl_quantize(const PhaseSpaceField& f, double hbar, const SymbolFunction& analytic);
CMatrix weyl_matrix(const MidpointSymbol& s, double hbar);

// Inverse of weyl_quantize; output lives on the conjugate momentum grid.
PhaseSpaceField wigner_transform(const DensityOperator& rho);

// Kernel (d_x + d_y) rho(x, y), spectral on both indices.
CMatrix quantum_grad_x(const DensityOperator& rho);
// Kernel (x - y) rho(x, y) / (i hbar).
CMatrix quantum_grad_xi(const DensityOperator& rho);

// sum_j |lambda_j| |psi_j(x_i)|^2 / dx for Hermitian A.
std::vector<double> diag_abs(const CMatrix& a, const Grid1D& grid);

// Right multiplication by a momentum multiplier m(hbar k) (row-wise spectral filter).
CMatrix right_momentum_multiply(const CMatrix& a, const Grid1D& grid, double hbar, const std::function<double(double)>& m);
// Left multiplication by a momentum multiplier (column-wise spectral filter).
CMatrix left_momentum_multiply(const CMatrix& a, const Grid1D& grid, double hbar, const std::function<double(double)>& m);
// Expectation Tr(|A| m(p)) from the eigenvectors of Hermitian A.
double abs_momentum_moment(const CMatrix& a, const Grid1D& grid, double hbar, const std::function<double(double)>& m);

struct IdentityResidual {
  std::string name;
  double residual = 0.0;  // relative L^2 (Frobenius) mismatch
};

struct WeylIdentityReport {
  std::vector<IdentityResidual> identities;
  double coefficient_sum_p = 0.0;       // abs coefficient sum of the |p|^n expansion
  double coefficient_bound_p = 0.0;     // (4d)^n
  double coefficient_sum_x = 0.0;       // abs coefficient sum of the |x|^n expansion
  double coefficient_expected_x = 0.0;  // (9d/4)^{n/2}
  double max_residual() const;
};

// Symbol-side rules for right multiplication by p and by x.
MidpointSymbol symbol_times_p(const MidpointSymbol& g, double hbar);
MidpointSymbol symbol_times_x(const MidpointSymbol& g, double hbar);

// Both sides of op(f)|p|^n, op(f)|x|^n and op(f)|p|^{n1}|x|^n.
WeylIdentityReport weyl_multiply_identities_check(const PhaseSpaceField& f, double hbar, int n, int n1);
WeylIdentityReport weyl_multiply_identities_check(const MidpointSymbol& f, double hbar, int n, int n1);

// Abs coefficient sum of (sum_a (y_a + c D_a)^2)^{n/2} by explicit expansion.
double expansion_coefficient_sum(int d, int n, double c);

struct OperatorSymbolNorms {
  double operator_norm = 0.0;      // h^{-d} ||op(f)||_op
  double raw_operator_norm = 0.0;  // ||op(f)||_op of the dx-scaled matrix
  double symbol_norm = 0.0;        // ||f||_{W^{n0, inf}}, n0 = floor(d/2) + 1
};
OperatorSymbolNorms operator_norm_vs_symbol(const PhaseSpaceField& f, double hbar);

struct PsdRepair {
  DensityOperator state;
  double clipped_mass = 0.0;  // sum of |negative eigenvalues| before renormalization
};
// Clip negative eigenvalues and renormalize the trace to one.
PsdRepair psd_repair(const DensityOperator& rho);

// Cyclic translation by `cells` grid cells on both indices.
CMatrix translate(const CMatrix& m, long cells);

}  // namespace semiclab
