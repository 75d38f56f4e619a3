#pragma once

#include <cstdint>
#include <utility>

#include "sdp/cube.hpp"

namespace sdp {

// Synthetic stand-in scenes: piecewise-smooth Gaussian blobs, each carrying a
// smooth per-band spectrum (mixture of Gaussian bumps over band index), values
// clipped to [0, 1]. Deterministic per seed.
SpectralCube synthesize_scene(uint64_t seed, int height, int width, int bands);

// i.i.d. Bernoulli(0.5) binary mask, deterministic per seed.
CodedMask random_mask(uint64_t seed, int height, int width);

// One spatial transform applied identically to every band and to the mask.
struct Augmentation {
    int quarter_turns = 0; // k in {0..3}, counter-clockwise 90-degree steps
    bool hflip = false;
    bool vflip = false;
};

Augmentation draw_augmentation(uint64_t seed);
SpectralCube apply_augmentation(const SpectralCube& cube, const Augmentation& aug);
CodedMask apply_augmentation(const CodedMask& mask, const Augmentation& aug);
std::pair<SpectralCube, CodedMask> augment(const SpectralCube& cube, const CodedMask& mask,
                                           uint64_t seed);

struct CropWindow {
    int row0 = 0;
    int col0 = 0;
    int size = 0;
};

CropWindow draw_crop(uint64_t seed, int height, int width, int size);
SpectralCube apply_crop(const SpectralCube& cube, const CropWindow& w);
CodedMask apply_crop(const CodedMask& mask, const CropWindow& w);
std::pair<SpectralCube, CodedMask> crop_block(const SpectralCube& cube, const CodedMask& mask,
                                              int size, uint64_t seed);

} // namespace sdp
