#pragma once

#include <cstdint>
#include <vector>

#include "sdp/errors.hpp"

namespace sdp {

// Hyperspectral cube, band-major storage: data[(band * height + row) * width + col].
// Values are dimensionless reflectance in [0, 1] after normalization.
struct SpectralCube {
    int height = 0;
    int width = 0;
    int bands = 0;
    std::vector<float> data;

    SpectralCube() = default;
    SpectralCube(int h, int w, int l)
        : height(h), width(w), bands(l),
          data(static_cast<size_t>(h) * w * l, 0.0f) {}

    float& at(int band, int row, int col) {
        return data[(static_cast<size_t>(band) * height + row) * width + col];
    }
    float at(int band, int row, int col) const {
        return data[(static_cast<size_t>(band) * height + row) * width + col];
    }

    const float* band_ptr(int band) const {
        return data.data() + static_cast<size_t>(band) * height * width;
    }
    float* band_ptr(int band) {
        return data.data() + static_cast<size_t>(band) * height * width;
    }

    size_t voxels() const { return data.size(); }

    void validate() const {
        if (bands < 1 || height < 1 || width < 1)
            throw ShapeError("cube dimensions must be positive");
        if (data.size() != static_cast<size_t>(height) * width * bands)
            throw ShapeError("cube data length does not match dimensions");
    }
};

// Coded aperture pattern; spatial dims match the cube it encodes.
struct CodedMask {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    CodedMask() = default;
    CodedMask(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w, 0.0f) {}

    float& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
    float at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
};

// Band wavelengths and the index of the dispersion reference wavelength.
struct SceneMeta {
    std::vector<double> wavelengths_nm;
    int center_index = 0;

    void validate() const {
        if (wavelengths_nm.empty())
            throw ConfigError("scene meta needs at least one wavelength");
        for (size_t i = 1; i < wavelengths_nm.size(); ++i)
            if (wavelengths_nm[i] <= wavelengths_nm[i - 1])
                throw ConfigError("wavelengths must be strictly increasing");
        if (center_index < 0 || center_index >= static_cast<int>(wavelengths_nm.size()))
            throw ConfigError("center_index out of range");
    }
};

inline bool same_spatial(const SpectralCube& c, const CodedMask& m) {
    return c.height == m.height && c.width == m.width;
}

inline bool same_dims(const SpectralCube& a, const SpectralCube& b) {
    return a.height == b.height && a.width == b.width && a.bands == b.bands;
}

} // namespace sdp
