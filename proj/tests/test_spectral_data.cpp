#include <algorithm>
#include <fstream>

#include "doctest.h"
#include "sdp/cube_io.hpp"
#include "sdp/scene.hpp"
#include "test_util.hpp"

using namespace sdp;

TEST_CASE("cube file round trip") {
    test::TempDir tmp("cube_io");

    SpectralCube cube(2, 2, 1);
    cube.data = {0.0f, 0.5f, 1.0f, 0.25f};
    const std::string path = tmp.path("a.hsc");
    save_cube(cube, path);

    const SpectralCube back = load_cube(path);
    CHECK(back.height == 2);
    CHECK(back.width == 2);
    CHECK(back.bands == 1);
    CHECK(back.data == cube.data);
}

TEST_CASE("1x1x1 cube file is exactly 20 bytes") {
    test::TempDir tmp("cube_io");
    SpectralCube cube(1, 1, 1);
    const std::string path = tmp.path("tiny.hsc");
    save_cube(cube, path);
    CHECK(std::filesystem::file_size(path) == 20);
}

TEST_CASE("bad magic rejected") {
    test::TempDir tmp("cube_io");
    const std::string path = tmp.path("bad.hsc");
    std::ofstream(path, std::ios::binary) << "XXXXgarbagegarbage";
    CHECK_THROWS_AS(load_cube(path), FormatError);
}

TEST_CASE("truncated payload rejected") {
    test::TempDir tmp("cube_io");
    SpectralCube cube(4, 4, 2);
    const std::string path = tmp.path("trunc.hsc");
    save_cube(cube, path);
    std::filesystem::resize_file(path, 24);
    CHECK_THROWS_AS(load_cube(path), FormatError);
}

TEST_CASE("non-writable path raises io error") {
    SpectralCube cube(1, 1, 1);
    CHECK_THROWS_AS(save_cube(cube, "/nonexistent_dir_zzz/cube.hsc"), IoError);
}

TEST_CASE("save/load round trip is byte identical on random cubes") {
    test::TempDir tmp("cube_io");
    Rng rng(42);
    for (int trial = 0; trial < 3; ++trial) {
        SpectralCube cube(5, 7, 3);
        for (auto& v : cube.data) v = static_cast<float>(rng.uniform());
        const std::string p1 = tmp.path("r1.hsc");
        const std::string p2 = tmp.path("r2.hsc");
        save_cube(cube, p1);
        save_cube(load_cube(p1), p2);

        std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
        std::string b1((std::istreambuf_iterator<char>(f1)), {});
        std::string b2((std::istreambuf_iterator<char>(f2)), {});
        CHECK(b1 == b2);
    }
}

TEST_CASE("mask files carry MSK1 magic and one band") {
    test::TempDir tmp("mask_io");
    const CodedMask mask = random_mask(3, 8, 8);
    const std::string path = tmp.path("m.msk");
    save_mask(mask, path);

    std::ifstream is(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    CHECK(std::string(magic, 4) == "MSK1");
    const CodedMask back = load_mask(path);
    CHECK(back.data == mask.data);
    CHECK_THROWS_AS(load_cube(path), FormatError); // wrong magic for a cube
}

TEST_CASE("scene synthesis is deterministic and clipped") {
    const SpectralCube a = synthesize_scene(7, 32, 32, 8);
    const SpectralCube b = synthesize_scene(7, 32, 32, 8);
    CHECK(a.data == b.data);
    const auto [lo, hi] = std::minmax_element(a.data.begin(), a.data.end());
    CHECK(*lo >= 0.0f);
    CHECK(*hi <= 1.0f);
    const SpectralCube c = synthesize_scene(8, 32, 32, 8);
    CHECK(a.data != c.data);
}

TEST_CASE("scenes are smoother across bands than across space") {
    // oracle: compare mean |band_{n+1} - band_n| against the mean in-band
    // spatial gradient magnitude
    for (uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull}) {
        const SpectralCube cube = synthesize_scene(seed, 32, 32, 8);
        double inter = 0.0;
        int64_t inter_n = 0;
        for (int n = 0; n + 1 < cube.bands; ++n)
            for (int y = 0; y < cube.height; ++y)
                for (int x = 0; x < cube.width; ++x) {
                    inter += std::abs(cube.at(n + 1, y, x) - cube.at(n, y, x));
                    ++inter_n;
                }
        double intra = 0.0;
        int64_t intra_n = 0;
        for (int n = 0; n < cube.bands; ++n)
            for (int y = 0; y < cube.height; ++y)
                for (int x = 0; x + 1 < cube.width; ++x) {
                    intra += std::abs(cube.at(n, y, x + 1) - cube.at(n, y, x));
                    ++intra_n;
                }
        CHECK(inter / inter_n < intra / intra_n);
    }
}

TEST_CASE("random mask is binary, balanced and deterministic") {
    const CodedMask m = random_mask(1, 256, 256);
    const CodedMask m2 = random_mask(1, 256, 256);
    CHECK(m.data == m2.data);
    int64_t ones = 0;
    for (float v : m.data) {
        CHECK((v == 0.0f || v == 1.0f));
        ones += v == 1.0f;
    }
    const double frac = static_cast<double>(ones) / m.data.size();
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);

    const CodedMask tiny = random_mask(9, 1, 1);
    CHECK((tiny.data[0] == 0.0f || tiny.data[0] == 1.0f));
}

TEST_CASE("identity augmentation leaves input unchanged") {
    const SpectralCube cube = synthesize_scene(1, 16, 16, 4);
    const CodedMask mask = random_mask(1, 16, 16);
    const Augmentation id{};
    CHECK(apply_augmentation(cube, id).data == cube.data);
    CHECK(apply_augmentation(mask, id).data == mask.data);
}

TEST_CASE("four quarter turns compose to the identity") {
    const SpectralCube cube = synthesize_scene(2, 16, 16, 4);
    Augmentation rot;
    rot.quarter_turns = 1;
    SpectralCube r = cube;
    for (int i = 0; i < 4; ++i) r = apply_augmentation(r, rot);
    CHECK(r.data == cube.data);
}

TEST_CASE("augmentation preserves the per-band multiset of values") {
    const SpectralCube cube = synthesize_scene(3, 16, 16, 4);
    const CodedMask mask = random_mask(3, 16, 16);
    for (uint64_t seed = 0; seed < 6; ++seed) {
        const auto [ac, am] = augment(cube, mask, seed);
        for (int n = 0; n < cube.bands; ++n) {
            std::vector<float> orig(cube.band_ptr(n), cube.band_ptr(n) + 16 * 16);
            std::vector<float> aug(ac.band_ptr(n), ac.band_ptr(n) + 16 * 16);
            std::sort(orig.begin(), orig.end());
            std::sort(aug.begin(), aug.end());
            CHECK(orig == aug);
        }
        CHECK(am.data.size() == mask.data.size());
    }
}

TEST_CASE("rotation on non-square input is an error") {
    SpectralCube cube(8, 12, 2);
    Augmentation rot;
    rot.quarter_turns = 1;
    CHECK_THROWS_AS(apply_augmentation(cube, rot), ShapeError);
}

TEST_CASE("full-size crop returns the input") {
    const SpectralCube cube = synthesize_scene(4, 16, 16, 4);
    const CodedMask mask = random_mask(4, 16, 16);
    const auto [cc, cm] = crop_block(cube, mask, 16, 99);
    CHECK(cc.data == cube.data);
    CHECK(cm.data == mask.data);
}

TEST_CASE("cropped values match the source at the drawn offset") {
    const SpectralCube cube = synthesize_scene(5, 32, 32, 4);
    const CodedMask mask = random_mask(5, 32, 32);
    const CropWindow w = draw_crop(77, 32, 32, 12);
    const SpectralCube cc = apply_crop(cube, w);
    const CodedMask cm = apply_crop(mask, w);
    CHECK(cc.height == 12);
    CHECK(cc.width == 12);
    CHECK(cc.bands == cube.bands);
    for (int n = 0; n < cube.bands; ++n)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x)
                CHECK(cc.at(n, y, x) == cube.at(n, w.row0 + y, w.col0 + x));
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x)
            CHECK(cm.at(y, x) == mask.at(w.row0 + y, w.col0 + x));
}

TEST_CASE("oversized crop is an error") {
    const SpectralCube cube = synthesize_scene(6, 16, 16, 2);
    const CodedMask mask = random_mask(6, 16, 16);
    CHECK_THROWS_AS(crop_block(cube, mask, 17, 0), ShapeError);
}

TEST_CASE("manifest round trip validates shared band count") {
    test::TempDir tmp("manifest");
    for (int i = 0; i < 2; ++i) {
        save_cube(synthesize_scene(static_cast<uint64_t>(i), 16, 16, 4),
                  tmp.path("c" + std::to_string(i) + ".hsc"));
        save_mask(random_mask(static_cast<uint64_t>(i), 16, 16),
                  tmp.path("m" + std::to_string(i) + ".msk"));
    }
    DatasetManifest m;
    m.split = "train";
    m.entries = {{"c0.hsc", "m0.msk", 1}, {"c1.hsc", "m1.msk", 2}};
    save_manifest(m, tmp.path("train.json"));

    const DatasetManifest back = load_manifest(tmp.path("train.json"), "train");
    CHECK(back.entries.size() == 2);
    CHECK(back.split == "train");

    // band mismatch across entries is rejected
    save_cube(synthesize_scene(9, 16, 16, 5), tmp.path("c2.hsc"));
    m.entries.push_back({"c2.hsc", "m0.msk", 3});
    save_manifest(m, tmp.path("bad.json"));
    CHECK_THROWS_AS(load_manifest(tmp.path("bad.json"), "train"), FormatError);
}
