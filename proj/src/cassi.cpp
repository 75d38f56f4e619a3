#include "sdp/cassi.hpp"

#include "sdp/cube_io.hpp"

namespace sdp {

SpectralCube encode(const SpectralCube& cube, const CodedMask& mask) {
    if (!same_spatial(cube, mask))
        throw ShapeError("encode: cube and mask spatial dims differ");
    SpectralCube out(cube.height, cube.width, cube.bands);
    const size_t plane = static_cast<size_t>(cube.height) * cube.width;
    for (int n = 0; n < cube.bands; ++n) {
        const float* src = cube.band_ptr(n);
        float* dst = out.band_ptr(n);
        for (size_t i = 0; i < plane; ++i) dst[i] = src[i] * mask.data[i];
    }
    return out;
}

Measurement disperse_sum(const SpectralCube& encoded, const ShiftSpec& spec) {
    spec.validate();
    encoded.validate();
    const int min_off = spec.step_d * (0 - spec.center_index);
    if (min_off < 0)
        throw ConfigError("disperse_sum: center_index would shift band 0 to negative columns");
    const int width_m = encoded.width + spec.step_d * (encoded.bands - 1 - spec.center_index);
    Measurement y(encoded.height, width_m);
    for (int n = 0; n < encoded.bands; ++n) {
        const int off = spec.step_d * (n - spec.center_index);
        const float* src = encoded.band_ptr(n);
        for (int r = 0; r < encoded.height; ++r) {
            float* dst = &y.at(r, off);
            const float* row = src + static_cast<size_t>(r) * encoded.width;
            for (int c = 0; c < encoded.width; ++c) dst[c] += row[c];
        }
    }
    return y;
}

SpectralCube shift_back(const Measurement& y, const ShiftSpec& spec, int bands) {
    spec.validate();
    if (bands < 1) throw ShapeError("shift_back: bands must be >= 1");
    if (spec.center_index > 0)
        throw ConfigError("shift_back: center_index would read negative columns");
    const int span = spec.step_d * (bands - 1);
    const int width_t = y.width - span;
    if (width_t < 1)
        throw ShapeError("shift_back: band count inconsistent with measurement width");
    SpectralCube out(y.height, width_t, bands);
    for (int n = 0; n < bands; ++n) {
        const int off = spec.step_d * (n - spec.center_index);
        float* dst = out.band_ptr(n);
        for (int r = 0; r < y.height; ++r) {
            const float* src = y.data.data() + static_cast<size_t>(r) * y.width + off;
            float* row = dst + static_cast<size_t>(r) * width_t;
            for (int c = 0; c < width_t; ++c) row[c] = src[c];
        }
    }
    return out;
}

Measurement forward_model(const SpectralCube& cube, const CodedMask& mask, const ShiftSpec& spec) {
    return disperse_sum(encode(cube, mask), spec);
}

Measurement load_measurement(const std::string& path) {
    const SpectralCube c = load_cube(path);
    if (c.bands != 1) throw FormatError(path + ": measurement files must have one band");
    Measurement m(c.height, c.width);
    m.data = c.data;
    return m;
}

void save_measurement(const Measurement& m, const std::string& path) {
    SpectralCube c(m.height, m.width, 1);
    c.data = m.data;
    save_cube(c, path);
}

} // namespace sdp
