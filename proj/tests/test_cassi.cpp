#include "doctest.h"
#include "sdp/cassi.hpp"
#include "sdp/rng.hpp"
#include "sdp/scene.hpp"

using namespace sdp;

namespace {

SpectralCube random_cube(uint64_t seed, int h, int w, int l) {
    Rng rng(seed);
    SpectralCube cube(h, w, l);
    for (auto& v : cube.data) v = static_cast<float>(rng.uniform());
    return cube;
}

CodedMask ones_mask(int h, int w) {
    CodedMask m(h, w);
    std::fill(m.data.begin(), m.data.end(), 1.0f);
    return m;
}

} // namespace

TEST_CASE("encode with identity and zero masks") {
    const SpectralCube cube = random_cube(1, 4, 4, 2);
    CHECK(encode(cube, ones_mask(4, 4)).data == cube.data);

    CodedMask zeros(4, 4);
    const SpectralCube z = encode(cube, zeros);
    for (float v : z.data) CHECK(v == 0.0f);
}

TEST_CASE("encode matches elementwise multiply") {
    const SpectralCube cube = random_cube(2, 4, 4, 2);
    const CodedMask mask = random_mask(3, 4, 4);
    const SpectralCube out = encode(cube, mask);
    for (int n = 0; n < 2; ++n)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                CHECK(out.at(n, y, x) == cube.at(n, y, x) * mask.at(y, x));
}

TEST_CASE("encode rejects mismatched dims") {
    const SpectralCube cube = random_cube(4, 4, 4, 2);
    CHECK_THROWS_AS(encode(cube, CodedMask(4, 5)), ShapeError);
}

TEST_CASE("disperse_sum hand example and shift_back inversion") {
    // 1x2 spatial, two bands: band0 = [1, 2], band1 = [3, 4], d = 1
    SpectralCube cube(1, 2, 2);
    cube.at(0, 0, 0) = 1.0f;
    cube.at(0, 0, 1) = 2.0f;
    cube.at(1, 0, 0) = 3.0f;
    cube.at(1, 0, 1) = 4.0f;
    const ShiftSpec spec{1, 0};
    const Measurement y = disperse_sum(cube, spec);
    REQUIRE(y.width == 3);
    CHECK(y.at(0, 0) == 1.0f);
    CHECK(y.at(0, 1) == 5.0f);
    CHECK(y.at(0, 2) == 4.0f);

    const SpectralCube back = shift_back(y, spec, 2);
    REQUIRE(back.width == 2);
    CHECK(back.at(0, 0, 0) == 1.0f);
    CHECK(back.at(0, 0, 1) == 5.0f);
    CHECK(back.at(1, 0, 0) == 5.0f);
    CHECK(back.at(1, 0, 1) == 4.0f);
}

TEST_CASE("zero dispersion sums bands in place") {
    const SpectralCube cube = random_cube(5, 3, 4, 3);
    const ShiftSpec spec{0, 0};
    const Measurement y = disperse_sum(cube, spec);
    CHECK(y.width == 4);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) {
            float sum = 0.0f;
            for (int n = 0; n < 3; ++n) sum += cube.at(n, r, c);
            CHECK(y.at(r, c) == doctest::Approx(sum).epsilon(1e-6));
        }
    const SpectralCube back = shift_back(y, spec, 3);
    for (int n = 0; n < 3; ++n)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) CHECK(back.at(n, r, c) == y.at(r, c));
}

TEST_CASE("paper geometry: 256x256x28 at d=2 gives a 256x310 measurement") {
    const SpectralCube cube = random_cube(6, 256, 256, 28);
    const CodedMask mask = random_mask(7, 256, 256);
    const ShiftSpec spec{2, 0};
    const Measurement y = forward_model(cube, mask, spec);
    CHECK(y.height == 256);
    CHECK(y.width == 310);
    const SpectralCube back = shift_back(y, spec, 28);
    CHECK(back.height == 256);
    CHECK(back.width == 256);
    CHECK(back.bands == 28);
}

TEST_CASE("forward model is linear in the cube") {
    const SpectralCube g1 = random_cube(8, 6, 6, 3);
    const SpectralCube g2 = random_cube(9, 6, 6, 3);
    const CodedMask mask = random_mask(10, 6, 6);
    const ShiftSpec spec{2, 0};
    const float a = 0.7f, b = -1.3f;

    SpectralCube combo(6, 6, 3);
    for (size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = a * g1.data[i] + b * g2.data[i];

    const Measurement lhs = forward_model(combo, mask, spec);
    const Measurement y1 = forward_model(g1, mask, spec);
    const Measurement y2 = forward_model(g2, mask, spec);
    for (size_t i = 0; i < lhs.data.size(); ++i) {
        const float rhs = a * y1.data[i] + b * y2.data[i];
        CHECK(lhs.data[i] == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("zero cube gives zero measurement") {
    SpectralCube cube(4, 4, 2);
    const Measurement y = forward_model(cube, random_mask(1, 4, 4), ShiftSpec{2, 0});
    for (float v : y.data) CHECK(v == 0.0f);
}

TEST_CASE("single nonzero band appears shifted by d*n") {
    const int n_active = 2;
    SpectralCube cube(3, 4, 4);
    Rng rng(11);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) cube.at(n_active, y, x) = static_cast<float>(rng.uniform());
    const ShiftSpec spec{2, 0};
    const Measurement y = disperse_sum(cube, spec);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < y.width; ++c) {
            const int src = c - spec.step_d * n_active;
            const float expect = (src >= 0 && src < 4) ? cube.at(n_active, r, src) : 0.0f;
            CHECK(y.at(r, c) == expect);
        }
    // shift-back recovers the band exactly over its window
    const SpectralCube back = shift_back(y, spec, 4);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < back.width; ++c)
            CHECK(back.at(n_active, r, c) == cube.at(n_active, r, c));
}

TEST_CASE("width law holds across geometries") {
    Rng rng(12);
    for (int trial = 0; trial < 8; ++trial) {
        const int h = rng.uniform_int(2, 10);
        const int w = rng.uniform_int(2, 12);
        const int l = rng.uniform_int(1, 6);
        const int d = rng.uniform_int(0, 3);
        const SpectralCube cube = random_cube(100 + static_cast<uint64_t>(trial), h, w, l);
        const Measurement y = disperse_sum(cube, ShiftSpec{d, 0});
        CHECK(y.width - w == d * (l - 1));
    }
}

TEST_CASE("shift_back rejects inconsistent band counts") {
    Measurement y(2, 5);
    CHECK_THROWS_AS(shift_back(y, ShiftSpec{2, 0}, 4), ShapeError);
}

TEST_CASE("nonzero center index is rejected where it would index negative columns") {
    const SpectralCube cube = random_cube(13, 4, 4, 3);
    CHECK_THROWS_AS(disperse_sum(cube, ShiftSpec{2, 1}), ConfigError);
    Measurement y(4, 10);
    CHECK_THROWS_AS(shift_back(y, ShiftSpec{2, 1}, 3), ConfigError);
}
