#include "sdp/scene.hpp"

#include <algorithm>
#include <cmath>

#include "sdp/rng.hpp"

namespace sdp {

namespace {

// Smooth spectrum over band index: mixture of Gaussian bumps plus a floor.
struct Spectrum {
    double floor;
    double amp[3];
    double mu[3];
    double sigma[3];
    int bumps;

    double eval(int band) const {
        double v = floor;
        for (int j = 0; j < bumps; ++j) {
            const double d = (band - mu[j]) / sigma[j];
            v += amp[j] * std::exp(-0.5 * d * d);
        }
        return v;
    }
};

// Bump widths are at least the full band range, so the per-band slope of any
// mixture component stays well below typical blob edge contrast.
Spectrum draw_spectrum(Rng& rng, int bands) {
    Spectrum s{};
    s.floor = 0.2 + 0.2 * rng.uniform();
    s.bumps = rng.uniform_int(1, 3);
    for (int j = 0; j < s.bumps; ++j) {
        s.amp[j] = 0.15 + 0.35 * rng.uniform();
        s.mu[j] = rng.uniform() * (bands - 1);
        s.sigma[j] = (1.0 + 0.8 * rng.uniform()) * std::max(1, bands);
    }
    return s;
}

} // namespace

SpectralCube synthesize_scene(uint64_t seed, int height, int width, int bands) {
    if (height < 8 || width < 8 || bands < 1)
        throw ConfigError("synthesize_scene needs dims >= 8 and bands >= 1");

    Rng rng(mix_seed({seed, hash_str("scene")}));
    SpectralCube cube(height, width, bands);

    // background: smooth diagonal ramp with its own spectrum
    const Spectrum bg_spec = draw_spectrum(rng, bands);
    const double gx = rng.uniform() - 0.5;
    const double gy = rng.uniform() - 0.5;

    struct Blob {
        double cx, cy, r, gain;
        Spectrum spec;
    };
    const int nblobs = rng.uniform_int(5, 8);
    std::vector<Blob> blobs(static_cast<size_t>(nblobs));
    for (auto& b : blobs) {
        // centers stay inside the frame so every blob contributes real edges
        b.cx = (0.15 + 0.7 * rng.uniform()) * width;
        b.cy = (0.15 + 0.7 * rng.uniform()) * height;
        b.r = (0.08 + 0.12 * rng.uniform()) * std::min(height, width);
        b.gain = 0.4 + 0.5 * rng.uniform();
        b.spec = draw_spectrum(rng, bands);
    }

    std::vector<double> bg_band(static_cast<size_t>(bands));
    for (int n = 0; n < bands; ++n) bg_band[static_cast<size_t>(n)] = bg_spec.eval(n);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double ramp =
                0.25 + 0.5 * (0.5 + gx * (double(x) / width - 0.5) + gy * (double(y) / height - 0.5));
            for (int n = 0; n < bands; ++n) {
                double v = ramp * bg_band[static_cast<size_t>(n)];
                for (const auto& b : blobs) {
                    const double dx = (x - b.cx) / b.r;
                    const double dy = (y - b.cy) / b.r;
                    const double q = dx * dx + dy * dy;
                    // super-Gaussian profile: flat interior, crisp boundary
                    const double w = std::exp(-0.5 * q * q);
                    v += b.gain * w * b.spec.eval(n);
                }
                cube.at(n, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return cube;
}

CodedMask random_mask(uint64_t seed, int height, int width) {
    if (height < 1 || width < 1) throw ConfigError("random_mask needs dims >= 1");
    Rng rng(mix_seed({seed, hash_str("mask")}));
    CodedMask mask(height, width);
    for (auto& v : mask.data) v = rng.bernoulli() ? 1.0f : 0.0f;
    return mask;
}

namespace {

// index map for one 90-degree ccw rotation / flips on an h x w grid
template <typename Get, typename Set>
void transform_plane(int h, int w, const Augmentation& aug, Get get, Set set) {
    const int k = ((aug.quarter_turns % 4) + 4) % 4;
    const bool swap = (k % 2) == 1;
    const int oh = swap ? w : h;
    const int ow = swap ? h : w;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            // invert rotation: find source pixel for output (y, x)
            int sy = y, sx = x;
            switch (k) {
                case 0: break;
                case 1: sy = x; sx = w - 1 - y; break;          // ccw
                case 2: sy = h - 1 - y; sx = w - 1 - x; break;
                case 3: sy = h - 1 - x; sx = y; break;
                default: break;
            }
            set(y, x, get(sy, sx));
        }
    }
}

void apply_flips_inplace(int h, int w, const Augmentation& aug, float* plane) {
    if (aug.hflip) {
        for (int y = 0; y < h; ++y)
            std::reverse(plane + static_cast<size_t>(y) * w, plane + static_cast<size_t>(y) * w + w);
    }
    if (aug.vflip) {
        for (int y = 0; y < h / 2; ++y)
            std::swap_ranges(plane + static_cast<size_t>(y) * w,
                             plane + static_cast<size_t>(y) * w + w,
                             plane + static_cast<size_t>(h - 1 - y) * w);
    }
}

} // namespace

Augmentation draw_augmentation(uint64_t seed) {
    Rng rng(mix_seed({seed, hash_str("augment")}));
    Augmentation aug;
    aug.quarter_turns = rng.uniform_int(0, 3);
    aug.hflip = rng.bernoulli();
    aug.vflip = rng.bernoulli();
    return aug;
}

SpectralCube apply_augmentation(const SpectralCube& cube, const Augmentation& aug) {
    if (aug.quarter_turns % 2 != 0 && cube.height != cube.width)
        throw ShapeError("rotation requires square spatial dims");
    SpectralCube out(cube.height, cube.width, cube.bands);
    for (int n = 0; n < cube.bands; ++n) {
        const float* src = cube.band_ptr(n);
        float* dst = out.band_ptr(n);
        transform_plane(
            cube.height, cube.width, aug,
            [&](int y, int x) { return src[static_cast<size_t>(y) * cube.width + x]; },
            [&](int y, int x, float v) { dst[static_cast<size_t>(y) * out.width + x] = v; });
        apply_flips_inplace(out.height, out.width, aug, dst);
    }
    return out;
}

CodedMask apply_augmentation(const CodedMask& mask, const Augmentation& aug) {
    if (aug.quarter_turns % 2 != 0 && mask.height != mask.width)
        throw ShapeError("rotation requires square spatial dims");
    CodedMask out(mask.height, mask.width);
    transform_plane(
        mask.height, mask.width, aug,
        [&](int y, int x) { return mask.data[static_cast<size_t>(y) * mask.width + x]; },
        [&](int y, int x, float v) { out.data[static_cast<size_t>(y) * out.width + x] = v; });
    apply_flips_inplace(out.height, out.width, aug, out.data.data());
    return out;
}

std::pair<SpectralCube, CodedMask> augment(const SpectralCube& cube, const CodedMask& mask,
                                           uint64_t seed) {
    const Augmentation aug = draw_augmentation(seed);
    return {apply_augmentation(cube, aug), apply_augmentation(mask, aug)};
}

CropWindow draw_crop(uint64_t seed, int height, int width, int size) {
    if (size < 1 || size > std::min(height, width))
        throw ShapeError("crop size exceeds source dims");
    Rng rng(mix_seed({seed, hash_str("crop")}));
    CropWindow w;
    w.size = size;
    w.row0 = rng.uniform_int(0, height - size);
    w.col0 = rng.uniform_int(0, width - size);
    return w;
}

SpectralCube apply_crop(const SpectralCube& cube, const CropWindow& w) {
    SpectralCube out(w.size, w.size, cube.bands);
    for (int n = 0; n < cube.bands; ++n)
        for (int y = 0; y < w.size; ++y)
            for (int x = 0; x < w.size; ++x)
                out.at(n, y, x) = cube.at(n, w.row0 + y, w.col0 + x);
    return out;
}

CodedMask apply_crop(const CodedMask& mask, const CropWindow& w) {
    CodedMask out(w.size, w.size);
    for (int y = 0; y < w.size; ++y)
        for (int x = 0; x < w.size; ++x)
            out.at(y, x) = mask.at(w.row0 + y, w.col0 + x);
    return out;
}

std::pair<SpectralCube, CodedMask> crop_block(const SpectralCube& cube, const CodedMask& mask,
                                              int size, uint64_t seed) {
    if (!same_spatial(cube, mask)) throw ShapeError("cube and mask dims differ");
    const CropWindow w = draw_crop(seed, cube.height, cube.width, size);
    return {apply_crop(cube, w), apply_crop(mask, w)};
}

} // namespace sdp
