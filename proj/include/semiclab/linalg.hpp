#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

namespace semiclab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // columns
};

// Dense Hermitian eigensolver (LAPACK zheevr, lower triangle).
HermitianEigen eigh(const CMatrix& a);
Eigen::VectorXd eigvalsh(const CMatrix& a);
// Singular values in nonincreasing order (LAPACK zgesdd, no vectors).
Eigen::VectorXd singular_values(const CMatrix& a);

// max |A - A^*| relative to max |A|; 0 for the zero matrix.
double hermiticity_defect(const CMatrix& a);

// op(A) op(B) through BLAS zgemm, op = identity or adjoint.
CMatrix matmul(const CMatrix& a, const CMatrix& b, bool adjoint_a = false, bool adjoint_b = false);

// V diag(fn(lambda)) V^*.
CMatrix apply_spectral(const HermitianEigen& e, const std::function<double(double)>& fn);
// U M U^* with U = V diag(phase) V^*.
CMatrix spectral_conjugate(const HermitianEigen& e, const Eigen::VectorXcd& phase, const CMatrix& m);
// A^q for PSD A; negative eigenvalues within tolerance are clipped, otherwise NOT_PSD.
CMatrix psd_power(const CMatrix& a, double q);

}  // namespace semiclab
