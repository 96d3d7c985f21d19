#pragma once

#include <json.hpp>
#include <vector>

#include "semiclab/linalg.hpp"
#include "semiclab/quantize.hpp"

namespace semiclab {

struct SchattenReport {
  std::vector<double> p_values;
  std::vector<double> schatten;       // raw (sum s_i^p)^{1/p}
  std::vector<double> semiclassical;  // h^{-d/p'} times raw
  double trace = 0.0;
  double op_norm = 0.0;
  std::vector<double> singular_values;  // nonincreasing
};

double schatten_norm(const Eigen::VectorXd& singular, double p);
// Prefactor h^{-d/p'} with 1/p' = 1 - 1/p.
double semiclassical_prefactor(double hbar, double p, int d = 1);

SchattenReport schatten(const CMatrix& a, double hbar, const std::vector<double>& p_values, int d = 1);
double semiclassical_norm(const CMatrix& a, double hbar, double p, int d = 1);
// Schatten-1 norm; uses the Hermitian eigen path when applicable.
double trace_norm(const CMatrix& a);
double trace_distance(const DensityOperator& a, const DensityOperator& b);

nlohmann::json to_json(const SchattenReport& r);

struct OracleSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

// (||AB||_p, ||A||_q ||B||_r) with 1/p = 1/q + 1/r.
OracleSides holder_oracle(const CMatrix& a, const CMatrix& b, double p, double q, double r);
// (||AB||_{qr}^q, ||A^q B^q||_r) for PSD A, B and q >= 1.
OracleSides alt_oracle(const CMatrix& a, const CMatrix& b, double q, double r);
// (||B^r A B||_p, ||A B^{r+1}||_p) for PSD A, B.
OracleSides mixing_oracle(const CMatrix& a, const CMatrix& b, double p, double r);

}  // namespace semiclab
