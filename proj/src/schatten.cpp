#include "semiclab/schatten.hpp"

#include <cmath>
#include <limits>

#include "semiclab/error.hpp"

namespace semiclab {

namespace {

Eigen::VectorXd singular_spectrum(const CMatrix& a) {
  if (a.rows() == a.cols() && hermiticity_defect(a) <= 1e-14) {
    Eigen::VectorXd s = eigvalsh(a).cwiseAbs();
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    return s;
  }
  return singular_values(a);
}

void require_psd(const CMatrix& a) {
  if (hermiticity_defect(a) > 1e-10) throw Error(ErrorCode::NotPsd, "operator is not Hermitian");
  const Eigen::VectorXd ev = eigvalsh(a);
  const double scale = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  if (ev.size() && ev.minCoeff() < -1e-10 * std::max(scale, 1e-300)) throw Error(ErrorCode::NotPsd, "operator has negative spectrum");
}

}  // namespace

namespace {

// (sum s_i^p)^{1/p} for any p > 0; a quasinorm below p = 1.
double spectral_power_sum(const Eigen::VectorXd& s, double p) {
  if (s.size() == 0) return 0.0;
  const double top = s.cwiseAbs().maxCoeff();
  if (std::isinf(p) || top == 0.0) return top;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(std::abs(s[i]) / top, p);
  return top * std::pow(acc, 1.0 / p);
}

}  // namespace

double schatten_norm(const Eigen::VectorXd& s, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::Exponent, "Schatten exponent must be >= 1");
  return spectral_power_sum(s, p);
}

double semiclassical_prefactor(double hbar, double p, int d) {
  const double inv_conj = std::isinf(p) ? 1.0 : 1.0 - 1.0 / p;
  return std::pow(planck(hbar), -d * inv_conj);
}

SchattenReport schatten(const CMatrix& a, double hbar, const std::vector<double>& p_values, int d) {
  SchattenReport r;
  const Eigen::VectorXd s = singular_spectrum(a);
  r.p_values = p_values;
  for (double p : p_values) {
    const double raw = schatten_norm(s, p);
    r.schatten.push_back(raw);
    r.semiclassical.push_back(semiclassical_prefactor(hbar, p, d) * raw);
  }
  r.trace = a.rows() == a.cols() ? a.trace().real() : 0.0;
  r.op_norm = s.size() ? s[0] : 0.0;
  r.singular_values.assign(s.data(), s.data() + s.size());
  return r;
}

double semiclassical_norm(const CMatrix& a, double hbar, double p, int d) {
  return semiclassical_prefactor(hbar, p, d) * schatten_norm(singular_spectrum(a), p);
}

double trace_norm(const CMatrix& a) { return schatten_norm(singular_spectrum(a), 1.0); }

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  if (a.grid != b.grid || std::abs(a.hbar - b.hbar) > 1e-14 * a.hbar)
    throw Error(ErrorCode::GridMismatch, "trace distance between operators on different grids");
  return trace_norm(a.matrix - b.matrix);
}

nlohmann::json to_json(const SchattenReport& r) {
  nlohmann::json p = nlohmann::json::array();
  for (double v : r.p_values) {
    if (std::isinf(v)) p.push_back("inf");
    else p.push_back(v);
  }
  return {{"p", p}, {"schatten", r.schatten}, {"semiclassical", r.semiclassical}, {"trace", r.trace}, {"opnorm", r.op_norm}};
}

OracleSides holder_oracle(const CMatrix& a, const CMatrix& b, double p, double q, double r) {
  const auto inv = [](double e) { return std::isinf(e) ? 0.0 : 1.0 / e; };
  if (std::abs(inv(p) - inv(q) - inv(r)) > 1e-12) throw Error(ErrorCode::Exponent, "Hoelder relation 1/p = 1/q + 1/r fails");
  return {schatten_norm(singular_values(a * b), p), schatten_norm(singular_values(a), q) * schatten_norm(singular_values(b), r)};
}

OracleSides alt_oracle(const CMatrix& a, const CMatrix& b, double q, double r) {
  if (q < 1.0 || !(r > 0.0)) throw Error(ErrorCode::Exponent, "ALT requires q >= 1 and r > 0");
  require_psd(a);
  require_psd(b);
  // r and q r may lie below 1, where the Schatten functional is a quasinorm.
  const double lhs = std::pow(spectral_power_sum(singular_values(a * b), q * r), q);
  const double rhs = spectral_power_sum(singular_values(psd_power(a, q) * psd_power(b, q)), r);
  return {lhs, rhs};
}

OracleSides mixing_oracle(const CMatrix& a, const CMatrix& b, double p, double r) {
  if (p < 1.0 || r < 0.0) throw Error(ErrorCode::Exponent, "mixing inequality needs p >= 1, r >= 0");
  require_psd(a);
  require_psd(b);
  const CMatrix br = psd_power(b, r);
  const CMatrix br1 = psd_power(b, r + 1.0);
  return {schatten_norm(singular_values(br * a * b), p), schatten_norm(singular_values(a * br1), p)};
}

}  // namespace semiclab
