#pragma once

#include "sdp/cube.hpp"

namespace sdp {

// 10*log10(peak^2 / MSE) over all voxels; identical inputs return +infinity.
double psnr(const SpectralCube& a, const SpectralCube& b, double peak = 1.0);

// Windowed SSIM per band (Gaussian window 11, sigma 1.5, K1=0.01, K2=0.03,
// dynamic range = peak), averaged over all valid windows and bands.
// Requires spatial dims >= 11.
double ssim(const SpectralCube& a, const SpectralCube& b, double peak = 1.0);

} // namespace sdp
