#pragma once

#include <string>

#include "semiclab/phasespace.hpp"
#include "semiclab/quantize.hpp"

namespace semiclab {

// PSF1: magic, then d, n_x, n_xi (int64), L_x, L_xi, time (float64), then row-major float64 samples.
void write_psf1(const std::string& path, const PhaseSpaceField& f);
PhaseSpaceField read_psf1(const std::string& path);

// DOP1: magic, n (int64), L, hbar (float64), then row-major interleaved re/im float64.
void write_dop1(const std::string& path, const DensityOperator& rho);
DensityOperator read_dop1(const std::string& path);

}  // namespace semiclab
