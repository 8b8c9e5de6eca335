#pragma once

#include <complex>
#include <vector>

#include "dmad/plane.hpp"
#include "dmad/scattering.hpp"

namespace dmad::oracle {

using Grid = std::vector<std::complex<double>>;

/// Spatial kernel of a Fourier-domain filter by a naive O(N^2) inverse DFT.
Grid spatial_kernel(const std::vector<double>& spectrum, int rows, int cols);

/// y[n] = sum_m x[m] h[(n - m) mod size], evaluated directly.
Grid circular_convolve(const Grid& x, const Grid& h, int rows, int cols);

/// Scattering maps computed in direct space from the bank's filters, in
/// order 0 / order 1 / order 2 sequence with layer-2 scales strictly coarser
/// than layer-1 scales. Only sensible for small planes (<= 32 x 32).
std::vector<Plane> direct_scattering(const Plane& x, const FilterBank& bank);

/// Brute-force path count: every (lambda1, lambda2) pair with
/// scale2 > scale1, compared in floating point.
std::size_t brute_force_path_count(int octaves, int q1, int q2, int l1, int l2);

}  // namespace dmad::oracle
