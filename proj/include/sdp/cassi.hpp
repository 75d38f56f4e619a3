#pragma once

#include "sdp/cube.hpp"

namespace sdp {

// Integer dispersion geometry: band n lands step_d * (n - center_index)
// columns to the right of its scene position.
struct ShiftSpec {
    int step_d = 2;
    int center_index = 0;

    void validate() const {
        if (step_d < 0) throw ConfigError("step_d must be >= 0");
        if (center_index < 0) throw ConfigError("center_index must be >= 0");
    }
};

// 2D coded snapshot; width = scene width + step_d * (bands - 1) when produced
// by forward_model.
struct Measurement {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Measurement() = default;
    Measurement(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w, 0.0f) {}

    float& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
    float at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
};

// Per-band elementwise mask modulation.
SpectralCube encode(const SpectralCube& cube, const CodedMask& mask);

// Shift band n right by step_d * (n - center_index) columns and sum over bands.
// Columns never written stay zero.
Measurement disperse_sum(const SpectralCube& encoded, const ShiftSpec& spec);

// Eq.-style initialization: per-band window extraction from the measurement,
// H(x, y, n) = Y(x, y + step_d * (n - center_index)).
SpectralCube shift_back(const Measurement& y, const ShiftSpec& spec, int bands);

// disperse_sum(encode(cube, mask)).
Measurement forward_model(const SpectralCube& cube, const CodedMask& mask, const ShiftSpec& spec);

Measurement load_measurement(const std::string& path);
void save_measurement(const Measurement& m, const std::string& path);

} // namespace sdp
