#pragma once

#include <string>
#include <vector>

#include "sdp/cube.hpp"

namespace sdp {

// HSC1 cube file:
//   bytes 0-3   magic "HSC1"
//   bytes 4-7   u32 LE height
//   bytes 8-11  u32 LE width
//   bytes 12-15 u32 LE bands
//   then height*width*bands IEEE-754 f32 LE, band-major (band, row, col)
// Mask files use the same layout with magic "MSK1" and bands == 1.

struct CubeHeader {
    uint32_t height = 0;
    uint32_t width = 0;
    uint32_t bands = 0;
};

SpectralCube load_cube(const std::string& path);
void save_cube(const SpectralCube& cube, const std::string& path);

CodedMask load_mask(const std::string& path);
void save_mask(const CodedMask& mask, const std::string& path);

// Header-only read, used for manifest validation.
CubeHeader peek_cube_header(const std::string& path);

struct ManifestEntry {
    std::string cube;
    std::string mask;
    uint64_t seed = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::string split; // "train" or "test"
};

// Manifest file is a JSON array of {"cube": path, "mask": path, "seed": int}.
// Relative paths resolve against the manifest's directory. Loading verifies
// that every referenced file exists and that all cubes share one band count.
DatasetManifest load_manifest(const std::string& path, const std::string& split);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

} // namespace sdp
