#include "semiclab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <cblas.h>
#include <lapacke.h>

#include "semiclab/error.hpp"

namespace semiclab {

namespace {

void check_square(const CMatrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::Dimension, "square matrix required");
}

// zheevr (MRRR) rather than zheevd: the divide-and-conquer back-transform goes through dgemm, which
// OpenBLAS 0.3.20 computes wrongly with its autodetected Cooperlake kernels for n >= 256.
void run_heevr(const CMatrix& a, Eigen::VectorXd& w, CMatrix* vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  w.resize(n);
  if (n == 0) {
    if (vectors) vectors->resize(0, 0);
    return;
  }
  CMatrix work = a;
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  CMatrix dummy(1, 1);
  if (vectors) vectors->resize(n, n);
  const lapack_int info =
      LAPACKE_zheevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'A', 'L', n, work.data(), n, 0.0, 0.0, 0, 0, 0.0, &found, w.data(),
                     vectors ? vectors->data() : dummy.data(), vectors ? n : 1, support.data());
  if (info != 0 || found != n) throw Error(ErrorCode::NonHermitian, "zheevr failed with info " + std::to_string(info));
}

}  // namespace

HermitianEigen eigh(const CMatrix& a) {
  check_square(a);
  HermitianEigen out;
  run_heevr(a, out.values, &out.vectors);
  return out;
}

Eigen::VectorXd eigvalsh(const CMatrix& a) {
  check_square(a);
  Eigen::VectorXd w;
  run_heevr(a, w, nullptr);
  return w;
}

Eigen::VectorXd singular_values(const CMatrix& a) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  Eigen::VectorXd s(std::min(m, n));
  if (s.size() == 0) return s;
  CMatrix work = a;
  const lapack_int info =
      LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, s.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw Error(ErrorCode::Config, "zgesdd failed with info " + std::to_string(info));
  return s;
}

double hermiticity_defect(const CMatrix& a) {
  check_square(a);
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

CMatrix matmul(const CMatrix& a, const CMatrix& b, bool adjoint_a, bool adjoint_b) {
  const Eigen::Index m = adjoint_a ? a.cols() : a.rows();
  const Eigen::Index k = adjoint_a ? a.rows() : a.cols();
  const Eigen::Index kb = adjoint_b ? b.cols() : b.rows();
  const Eigen::Index n = adjoint_b ? b.rows() : b.cols();
  if (k != kb) throw Error(ErrorCode::Dimension, "inner dimensions differ");
  CMatrix c(m, n);
  if (m == 0 || n == 0) return c;
  if (k == 0) return CMatrix::Zero(m, n);
  const Complex one(1.0), zero(0.0);
  cblas_zgemm(CblasColMajor, adjoint_a ? CblasConjTrans : CblasNoTrans, adjoint_b ? CblasConjTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), &one, a.data(), static_cast<int>(a.rows()), b.data(), static_cast<int>(b.rows()), &zero,
              c.data(), static_cast<int>(m));
  return c;
}

CMatrix apply_spectral(const HermitianEigen& e, const std::function<double(double)>& fn) {
  Eigen::VectorXd g(e.values.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = fn(e.values[i]);
  const CMatrix scaled = e.vectors * g.asDiagonal();
  return matmul(scaled, e.vectors, false, true);
}

CMatrix spectral_conjugate(const HermitianEigen& e, const Eigen::VectorXcd& phase, const CMatrix& m) {
  CMatrix w = matmul(e.vectors, matmul(m, e.vectors), true, false);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) *= phase[i] * std::conj(phase[j]);
  return matmul(matmul(e.vectors, w), e.vectors, false, true);
}

CMatrix psd_power(const CMatrix& a, double q) {
  if (hermiticity_defect(a) > 1e-8) throw Error(ErrorCode::NonHermitian, "fractional power of non-Hermitian matrix");
  const HermitianEigen e = eigh(a);
  const double scale = e.values.size() ? e.values.cwiseAbs().maxCoeff() : 0.0;
  if (e.values.size() && e.values.minCoeff() < -1e-10 * std::max(scale, 1e-300))
    throw Error(ErrorCode::NotPsd, "matrix has negative eigenvalues");
  return apply_spectral(e, [q](double l) { return l > 0.0 ? std::pow(l, q) : 0.0; });
}

}  // namespace semiclab
