#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace semiclab::fft {

using Complex = std::complex<double>;

constexpr int kForward = -1;   // sum x_j e^{-2 pi i jk/n}
constexpr int kBackward = +1;  // sum x_k e^{+2 pi i jk/n}, unnormalized

// In-place transform along the middle axis of a [outer][n][inner] row-major block.
// Plans are cached process-wide; planning is serialized, execution is thread-safe.
void transform_axis(Complex* data, std::size_t outer, std::size_t n, std::size_t inner, int sign);

// Transform along `axis` of a row-major array with the given shape.
void transform(std::vector<Complex>& data, const std::vector<std::size_t>& shape, std::size_t axis, int sign);

// Column-major n x n matrix (Eigen layout): transform every column, then every row.
void transform_matrix(Complex* data, std::size_t n, int sign);

}  // namespace semiclab::fft
