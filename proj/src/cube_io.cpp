#include "sdp/cube_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "nlohmann/json.hpp"

namespace sdp {

static_assert(std::endian::native == std::endian::little,
              "HSC1 reader/writer assumes a little-endian host");

namespace {

constexpr uint32_t kMaxVoxels = 1u << 31; // dimension-overflow guard

void write_u32(std::ostream& os, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    os.write(buf, 4);
}

uint32_t read_u32(std::istream& is) {
    char buf[4];
    is.read(buf, 4);
    uint32_t v = 0;
    std::memcpy(&v, buf, 4);
    return v;
}

CubeHeader read_header(std::istream& is, const char* magic, const std::string& path) {
    char got[4];
    is.read(got, 4);
    if (!is || std::memcmp(got, magic, 4) != 0)
        throw FormatError(path + ": bad magic, expected " + magic);
    CubeHeader h;
    h.height = read_u32(is);
    h.width = read_u32(is);
    h.bands = read_u32(is);
    if (!is) throw FormatError(path + ": truncated header");
    if (h.height == 0 || h.width == 0 || h.bands == 0)
        throw FormatError(path + ": zero dimension");
    const uint64_t n = uint64_t(h.height) * h.width * h.bands;
    if (n > kMaxVoxels)
        throw FormatError(path + ": dimension overflow");
    return h;
}

std::vector<float> read_payload(std::istream& is, uint64_t count, const std::string& path) {
    std::vector<float> data(count);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<uint64_t>(is.gcount()) != count * sizeof(float))
        throw FormatError(path + ": truncated payload");
    char extra;
    if (is.read(&extra, 1))
        throw FormatError(path + ": trailing bytes after payload");
    return data;
}

void write_file(const std::string& path, const char* magic, uint32_t h, uint32_t w,
                uint32_t l, const std::vector<float>& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(magic, 4);
    write_u32(os, h);
    write_u32(os, w);
    write_u32(os, l);
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!os) throw IoError("write failed: " + path);
}

} // namespace

SpectralCube load_cube(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    const CubeHeader h = read_header(is, "HSC1", path);
    SpectralCube cube(static_cast<int>(h.height), static_cast<int>(h.width),
                      static_cast<int>(h.bands));
    cube.data = read_payload(is, uint64_t(h.height) * h.width * h.bands, path);
    return cube;
}

void save_cube(const SpectralCube& cube, const std::string& path) {
    cube.validate();
    write_file(path, "HSC1", static_cast<uint32_t>(cube.height),
               static_cast<uint32_t>(cube.width), static_cast<uint32_t>(cube.bands),
               cube.data);
}

CodedMask load_mask(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    const CubeHeader h = read_header(is, "MSK1", path);
    if (h.bands != 1)
        throw FormatError(path + ": mask files must have a single band");
    CodedMask mask(static_cast<int>(h.height), static_cast<int>(h.width));
    mask.data = read_payload(is, uint64_t(h.height) * h.width, path);
    return mask;
}

void save_mask(const CodedMask& mask, const std::string& path) {
    write_file(path, "MSK1", static_cast<uint32_t>(mask.height),
               static_cast<uint32_t>(mask.width), 1, mask.data);
}

CubeHeader peek_cube_header(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char got[4];
    is.read(got, 4);
    if (!is || (std::memcmp(got, "HSC1", 4) != 0 && std::memcmp(got, "MSK1", 4) != 0))
        throw FormatError(path + ": unrecognized magic");
    CubeHeader h;
    h.height = read_u32(is);
    h.width = read_u32(is);
    h.bands = read_u32(is);
    if (!is) throw FormatError(path + ": truncated header");
    return h;
}

DatasetManifest load_manifest(const std::string& path, const std::string& split) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    if (!j.is_array()) throw FormatError(path + ": manifest must be a JSON array");

    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    DatasetManifest m;
    m.split = split;
    int bands = -1;
    for (const auto& e : j) {
        ManifestEntry entry;
        entry.cube = resolve(e.at("cube").get<std::string>());
        entry.mask = resolve(e.at("mask").get<std::string>());
        entry.seed = e.value("seed", 0ull);
        const CubeHeader ch = peek_cube_header(entry.cube);
        peek_cube_header(entry.mask);
        if (bands < 0) bands = static_cast<int>(ch.bands);
        else if (bands != static_cast<int>(ch.bands))
            throw FormatError(path + ": cubes disagree on band count");
        m.entries.push_back(std::move(entry));
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : manifest.entries)
        j.push_back({{"cube", e.cube}, {"mask", e.mask}, {"seed", e.seed}});
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write failed: " + path);
}

} // namespace sdp
