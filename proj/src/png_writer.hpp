#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sdp {

// Minimal 8-bit grayscale PNG writer (zlib-backed), enough for band images
// and simple line plots.
void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<uint8_t>& pixels);

} // namespace sdp
