#pragma once

#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "semiclab/dynamics.hpp"
#include "semiclab/kernel.hpp"
#include "semiclab/quantize.hpp"

namespace semiclab {

struct BoundPoint {
  double param = 0.0;
  double lhs = 0.0;
  double rhs_shape = 0.0;
  double ratio = 0.0;  // lhs / rhs_shape, 0 when lhs = 0
};

struct BoundCheck {
  std::string name;
  std::string axis;  // hbar, z, radius, t, ...
  std::vector<BoundPoint> points;
  double fitted_c = 0.0;  // ratio at the first (coarsest) point
  double spread = 1.0;    // max / min over positive ratios
  bool verdict = true;
  nlohmann::json details = nlohmann::json::object();
};

// Fills ratios, fitted_c and spread; verdict is spread < factor.
void finalize_ratio_check(BoundCheck& check, double factor = 10.0);
nlohmann::json to_json(const BoundCheck& check);
BoundCheck bound_check_from_json(const nlohmann::json& j);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
// Least squares of log(error) against log(param); needs >= 3 points and positive errors.
RateFit rate_fit(const std::vector<double>& param, const std::vector<double>& error);

// Exponents used by the commutator bounds; d = 1 with b <= 1 falls back to b = 3/2, b' = 3.
struct CommutatorExponents {
  double b = 0.0;
  double b_conjugate = 0.0;
  double eps = 0.0;        // (b' - 1) / 2 by default
  double eps_tilde = 0.0;  // eps / (4 b')
  bool proxy = false;
};
CommutatorExponents commutator_exponents(const KernelSpec& k, double eps = -1.0);

// Ladder of grids for a fixed phase-space symbol.
struct LadderSpec {
  std::vector<double> hbar{0.2, 0.1, 0.05, 0.025};
  double length = 8.0;
  double xi_extent = 2.5;   // momentum half-width that must be resolved
  std::size_t min_n = 256;
  std::size_t fixed_n = 0;  // overrides the rule when nonzero
};
// Smallest power of two >= max(min_n, 2 L xi_extent / (pi hbar)).
std::size_t grid_size_for(double hbar, const LadderSpec& spec);
Grid1D ladder_grid(double hbar, const LadderSpec& spec);

using Symbol = std::function<double(double x, double xi)>;
PhaseSpaceField sample_symbol(const Symbol& f, const Grid1D& x, double hbar);
DensityOperator quantize_symbol(const Symbol& f, double hbar, const LadderSpec& spec);

// ---- kernel decomposition

// omega_a = 2 pi^{a/2} / Gamma(a/2); 1 for the logarithm.
double omega_a(double a, bool logarithmic);
// Value of K(x)/omega_a at r = |x|^2 + delta^2 from the Gaussian superposition.
double gaussian_superposition(double a, bool logarithmic, double r);
// points: param = radius, lhs = closed form, rhs_shape = quadrature; verdict at 1e-6 relative.
BoundCheck gaussian_decomposition_check(const KernelSpec& k, const std::vector<double>& radii);

// ---- commutator bounds

// Commutator [K(. - z), rho] as a dx-scaled matrix.
CMatrix kernel_commutator(const DensityOperator& rho, const KernelSpec& k, double z);

struct CommutatorSides {
  double lhs = 0.0;
  double rhs_shape = 0.0;
};
// Tr|[K(.-z), rho]| against h ||diag|grad_xi rho|||_{b'-eps}^{1/2+eps~} ||.||_{b'+eps}^{1/2-eps~}.
CommutatorSides commutator_trace_sides(const DensityOperator& rho, const KernelSpec& k, double z, const CommutatorExponents& e);
BoundCheck commutator_trace_check(const DensityOperator& rho, const KernelSpec& k, const std::vector<double>& z_list, double factor = 10.0);

// ||[K(.-z), rho]||_{L^p} against h ||grad_xi rho m_n||_{L^{q+eps}}^{1/2+eps/q} ||.||_{L^{q-eps}}^{1/2-eps/q}.
CommutatorSides commutator_lp_sides(const DensityOperator& rho, const KernelSpec& k, double z, double p, int n = 2);
BoundCheck commutator_lp_check(const DensityOperator& rho, const KernelSpec& k, const std::vector<double>& z_list, double p,
                               double factor = 10.0);

// ||diag|grad_xi rho|||_{L^p} against (Tr |grad_xi rho| |p|^{n1})^{1/p} ||grad_xi rho||_{L^inf}^{1-1/p}, p = 1 + n1.
CommutatorSides kinetic_interpolation_sides(const DensityOperator& rho, int n1);
BoundCheck kinetic_interpolation_check(const DensityOperator& rho, int n1);

// ---- Weyl multiplication bounds

struct WeylBoundSides {
  std::string name;
  double lhs = 0.0;
  double rhs_shape = 0.0;
};
// weyl_vs_p, weyl_vs_x, weyl_vs_xp, moment_bound (n >= 2), diag_vs_symbol; also the operator-route value
// of ||op(g)|p|^n||_{L2} through the symbol calculus.
struct WeylBoundReport {
  std::vector<WeylBoundSides> sides;
  double symbol_route_p = 0.0;
  double prefactor_p = 0.0;  // (4d)^n
  double prefactor_x = 0.0;  // (9d/4)^n
};
WeylBoundReport weighted_weyl_sides(const PhaseSpaceField& g, double hbar, int n, int n1);
std::vector<BoundCheck> weighted_weyl_bound_check(const Symbol& g, const LadderSpec& ladder, int n, int n1, double factor = 10.0);

// ---- exchange

struct ExchangeSides {
  double trace = 0.0;       // Tr(X rho)
  double rhs_shape = 0.0;   // h^s || |p|^{a/2} rho ||_{L2}^2  (|x|^{-a/2} weight when a < 0)
  double weighted_l2 = 0.0; // || |p|^{a/2} rho ||_{L2}^2
  double energy_bound = 0.0; // ||rho||_{L^inf} Tr(|p|^a rho)
};
ExchangeSides exchange_sides(const DensityOperator& rho, const KernelSpec& k);
BoundCheck exchange_bound_check(const std::vector<DensityOperator>& ladder, const KernelSpec& k, double factor = 10.0);

// ---- classical stability

struct StabilityOptions {
  double t_final = 1.0;
  double dt = 1e-2;
  int record_every = 10;
  double lp = 2.0;  // exponent of the reported L^p variant
};
// points: param = t, lhs = ||f1 - f2||_{L1}, rhs_shape = fitted Gronwall envelope; verdict: lhs <= rhs at all t.
BoundCheck classical_stability_check(const PhaseSpaceField& f1, const PhaseSpaceField& f2, const KernelSpec& k, const StabilityOptions& opt);

}  // namespace semiclab
