#include "sdp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "png_writer.hpp"

namespace sdp {

std::vector<std::string> plot_bands(const SpectralCube& cube, const std::vector<int>& band_indices,
                                    const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> paths;
    for (int n : band_indices) {
        if (n < 0 || n >= cube.bands)
            throw ConfigError("plot_bands: band index " + std::to_string(n) + " out of range");
        std::vector<uint8_t> px(static_cast<size_t>(cube.height) * cube.width);
        const float* src = cube.band_ptr(n);
        for (size_t i = 0; i < px.size(); ++i) {
            const float v = std::clamp(src[i], 0.0f, 1.0f);
            px[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
        const std::string path =
            (std::filesystem::path(out_dir) / ("band_" + std::to_string(n) + ".png")).string();
        write_png_gray8(path, cube.width, cube.height, px);
        paths.push_back(path);
    }
    return paths;
}

namespace {

void draw_line(std::vector<uint8_t>& px, int w, int h, int x0, int y0, int x1, int y1,
               uint8_t shade) {
    // Bresenham
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        if (x0 >= 0 && x0 < w && y0 >= 0 && y0 < h)
            px[static_cast<size_t>(y0) * w + x0] = shade;
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x0 += sx; }
        if (e2 <= dx) { err += dx; y0 += sy; }
    }
}

} // namespace

void plot_spectra(const SpectralCube& cube, int row, int col, const std::string& out_path) {
    if (row < 0 || row >= cube.height || col < 0 || col >= cube.width)
        throw ConfigError("plot_spectra: pixel out of range");

    const int w = 640, h = 480, margin = 48;
    std::vector<uint8_t> px(static_cast<size_t>(w) * h, 255);

    // axes (value range fixed to [0, 1])
    draw_line(px, w, h, margin, h - margin, w - margin, h - margin, 0);
    draw_line(px, w, h, margin, margin, margin, h - margin, 0);

    const int plot_w = w - 2 * margin, plot_h = h - 2 * margin;
    auto px_x = [&](int band) {
        return cube.bands == 1 ? margin + plot_w / 2
                               : margin + band * plot_w / (cube.bands - 1);
    };
    auto px_y = [&](float v) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        return h - margin - static_cast<int>(std::lround(c * plot_h));
    };

    for (int n = 0; n + 1 < cube.bands; ++n)
        draw_line(px, w, h, px_x(n), px_y(cube.at(n, row, col)), px_x(n + 1),
                  px_y(cube.at(n + 1, row, col)), 0);
    if (cube.bands == 1) {
        const int x = px_x(0), y = px_y(cube.at(0, row, col));
        draw_line(px, w, h, x - 2, y, x + 2, y, 0);
        draw_line(px, w, h, x, y - 2, x, y + 2, 0);
    }

    write_png_gray8(out_path, w, h, px);
}

} // namespace sdp
