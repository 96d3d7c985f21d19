#pragma once

#include <functional>
#include <vector>

#include "semiclab/kernel.hpp"
#include "semiclab/linalg.hpp"
#include "semiclab/phasespace.hpp"
#include "semiclab/quantize.hpp"

namespace semiclab {

// Imposed potential U and its force -grad U on the spatial grid (one force array per axis).
struct ExternalField {
  std::vector<double> potential;
  std::vector<std::vector<double>> force;
  bool empty() const { return potential.empty() && force.empty(); }
};

// U = omega^2 |x|^2 / 2.
ExternalField harmonic_field(int d, const Grid1D& x, double omega = 1.0);

struct EvolutionConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  double hbar = 0.1;
  int record_every = 1;
};

// Strang splitting: half x-transport, full xi-kick by the field of the half-step state, half x-transport.
class VlasovSolver {
 public:
  VlasovSolver(const PhaseSpaceGrid& grid, const KernelSpec& k, ExternalField external = {});

  void step(PhaseSpaceField& f, double dt) const;
  // n steps with adjacent half transports merged.
  void advance(PhaseSpaceField& f, double dt, int steps) const;

  std::vector<std::vector<double>> force(const PhaseSpaceField& f) const;
  std::vector<double> potential(const PhaseSpaceField& f) const;
  double energy(const PhaseSpaceField& f) const;

  const MeanField& mean_field() const { return field_; }
  const PhaseSpaceGrid& grid() const { return grid_; }
  const ExternalField& external() const { return external_; }

 private:
  void transport(PhaseSpaceField& f, double tau) const;
  void kick(PhaseSpaceField& f, double tau) const;

  PhaseSpaceGrid grid_;
  MeanField field_;
  ExternalField external_;
};

PhaseSpaceField vlasov_step(const PhaseSpaceField& f, const KernelSpec& k, double dt);

// Strang splitting T/2, interaction (field from the half-step state), T/2 for the density matrix.
class HartreeSolver {
 public:
  HartreeSolver(const Grid1D& grid, double hbar, const KernelSpec& k, bool exchange = false, std::vector<double> external_potential = {});

  void step(DensityOperator& rho, double dt) const;
  void advance(DensityOperator& rho, double dt, int steps) const;

  std::vector<double> potential(const DensityOperator& rho) const;  // K * rho plus the imposed potential
  CMatrix exchange_operator(const DensityOperator& rho) const;
  // Tr(p^2/2 rho) + (1/2) int (K*rho) rho + int U rho, minus (1/2) Tr(X rho) with exchange.
  double energy(const DensityOperator& rho) const;
  double kinetic_energy(const DensityOperator& rho) const;

  bool exchange() const { return exchange_; }
  const MeanField& mean_field() const { return field_; }

 private:
  void kinetic(CMatrix& m, double tau) const;
  void interaction(CMatrix& m, double tau) const;

  Grid1D grid_;
  double hbar_;
  MeanField field_;
  bool exchange_;
  std::vector<double> external_;
  Eigen::MatrixXd kernel_table_;  // K(x_i - x_j)
};

DensityOperator hartree_step(const DensityOperator& rho, const KernelSpec& k, double dt);
DensityOperator hartree_fock_step(const DensityOperator& rho, const KernelSpec& k, double dt);

// Kernel K(x_i - x_j) rho(x_i, x_j) as a dx-scaled matrix.
CMatrix exchange_operator(const DensityOperator& rho, const KernelSpec& k);

// Kernel [V(x) - V(y) - W((x+y)/2)(x-y)] rho(x, y) with V = K * rho_f and W = grad V.
CMatrix b_t_operator(const DensityOperator& f_op, const std::vector<double>& rho_f, const KernelSpec& k);
// Same bracket for an imposed potential and its exact gradient.
CMatrix b_t_operator(const DensityOperator& f_op, const std::function<double(double)>& v, const std::function<double(double)>& w);

struct MomentSample {
  double time = 0.0;
  double m_x = 0.0;   // int |grad_x f|^p m
  double m_xi = 0.0;  // int |grad_xi f|^p m
  double m_2 = 0.0;   // sum over second derivatives of int |d^2 f|^p m
  double e_sup = 0.0;
  double grad_e_sup = 0.0;
  double j = 0.0;           // C_t (1 + ln(1 + ||grad rho||_inf)), C_t = ||rho||_1 + ||rho||_inf
  double rate_bound = 0.0;  // p [n (1 + ||E||_inf) / 2 + max(1, ||grad E||_inf)]
};

// Weight m = <z>^{n p}; throws RESOLUTION_ERROR on under-resolved data.
MomentSample moment_monitor_step(const PhaseSpaceField& f, const VlasovSolver& solver, double p, double n);

struct MomentEnvelope {
  std::vector<double> log_moment;  // log(M_x + M_xi)
  std::vector<double> envelope;    // log M(0) + C p (1 + n) int J
  std::vector<double> rigorous;    // log M(0) + int rate_bound
  double fitted_c = 0.0;           // rate_bound(0) / (p (1 + n) J(0))
  bool respected = true;
};

MomentEnvelope moment_envelope(const std::vector<MomentSample>& samples, double p, double n);

}  // namespace semiclab
