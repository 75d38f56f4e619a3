#pragma once

#include <string>
#include <vector>

#include "sdp/cube.hpp"

namespace sdp {

// Writes one grayscale PNG per band index to <out_dir>/band_<n>.png
// (pixel dims = cube spatial dims). Returns the written paths.
std::vector<std::string> plot_bands(const SpectralCube& cube, const std::vector<int>& band_indices,
                                    const std::string& out_dir);

// Writes the spectral curve of one pixel (value vs band index) as a PNG.
void plot_spectra(const SpectralCube& cube, int row, int col, const std::string& out_path);

} // namespace sdp
