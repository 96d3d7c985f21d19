#include "semiclab/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "semiclab/error.hpp"

namespace semiclab {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error(ErrorCode::Io, "truncated file " + path);
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  char tag[4];
  if (!in.read(tag, 4) || std::memcmp(tag, magic, 4) != 0) throw Error(ErrorCode::Io, "bad magic in " + path);
  return in;
}

}  // namespace

void write_psf1(const std::string& path, const PhaseSpaceField& f) {
  auto out = open_out(path);
  out.write("PSF1", 4);
  put<std::int64_t>(out, f.grid.dim);
  put<std::int64_t>(out, static_cast<std::int64_t>(f.grid.x.n_points));
  put<std::int64_t>(out, static_cast<std::int64_t>(f.grid.xi.n_points));
  put<double>(out, f.grid.x.length);
  put<double>(out, f.grid.xi.length);
  put<double>(out, f.time);
  out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

PhaseSpaceField read_psf1(const std::string& path) {
  auto in = open_in(path, "PSF1");
  const auto d = get<std::int64_t>(in, path);
  const auto nx = get<std::int64_t>(in, path);
  const auto nk = get<std::int64_t>(in, path);
  const auto lx = get<double>(in, path);
  const auto lk = get<double>(in, path);
  const auto t = get<double>(in, path);
  if (nx <= 0 || nk <= 0) throw Error(ErrorCode::Io, "bad grid header in " + path);
  PhaseSpaceField f(PhaseSpaceGrid(static_cast<int>(d), Grid1D(static_cast<std::size_t>(nx), lx),
                                   Grid1D(static_cast<std::size_t>(nk), lk)),
                    t);
  if (!in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double))))
    throw Error(ErrorCode::Io, "truncated samples in " + path);
  return f;
}

void write_dop1(const std::string& path, const DensityOperator& rho) {
  auto out = open_out(path);
  out.write("DOP1", 4);
  const std::size_t n = rho.size();
  put<std::int64_t>(out, static_cast<std::int64_t>(n));
  put<double>(out, rho.grid.length);
  put<double>(out, rho.hbar);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      put<double>(out, rho.matrix(i, j).real());
      put<double>(out, rho.matrix(i, j).imag());
    }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

DensityOperator read_dop1(const std::string& path) {
  auto in = open_in(path, "DOP1");
  const auto n = get<std::int64_t>(in, path);
  const auto len = get<double>(in, path);
  const auto hbar = get<double>(in, path);
  if (n <= 0) throw Error(ErrorCode::Io, "bad operator header in " + path);
  DensityOperator rho(Grid1D(static_cast<std::size_t>(n), len), hbar);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      const double re = get<double>(in, path);
      const double im = get<double>(in, path);
      rho.matrix(i, j) = Complex(re, im);
    }
  return rho;
}

}  // namespace semiclab
