#include <cmath>

#include "doctest.h"
#include "sdp/grad_check.hpp"
#include "sdp/nn.hpp"
#include "sdp/optim.hpp"
#include "test_util.hpp"

using namespace sdp;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, uint64_t seed, double scale = 1.0) {
    Tensor<T> t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = static_cast<T>(scale * rng.normal());
    return t;
}

// independent six-loop convolution oracle (stride/pad, square kernel)
template <typename T>
Tensor<T> conv_oracle(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                      int pad) {
    const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int cout = w.dim(0), k = w.dim(2);
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (wd + 2 * pad - k) / stride + 1;
    Tensor<T> out(Shape{cout, oh, ow});
    for (int co = 0; co < cout; ++co)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                T acc = b[co];
                for (int ci = 0; ci < cin; ++ci)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride + ky - pad;
                            const int ix = ox * stride + kx - pad;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                            acc += w.data[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx] *
                                   x.at3(ci, iy, ix);
                        }
                out.at3(co, oy, ox) = acc;
            }
    return out;
}

} // namespace

TEST_CASE("conv2d matches the naive oracle") {
    for (auto [stride, pad] : {std::pair{1, 1}, std::pair{1, 0}, std::pair{2, 1}}) {
        auto x = random_tensor<double>({1, 5, 5}, 10);
        auto w = random_tensor<double>({2, 1, 3, 3}, 11);
        auto b = random_tensor<double>({2}, 12);
        Tape<double> tape;
        auto out = tape.conv2d(tape.leaf(x), tape.leaf(w), tape.leaf(b), stride, pad);
        const auto expect = conv_oracle(x, w, b, stride, pad);
        REQUIRE(tape.val(out).shape == expect.shape);
        for (int64_t i = 0; i < expect.size(); ++i)
            CHECK(tape.val(out)[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
}

TEST_CASE("1x1 kernel is a per-channel scalar multiply") {
    auto x = random_tensor<double>({2, 4, 4}, 13);
    Tensor<double> w(Shape{2, 2, 1, 1});
    w.data = {2.0, 0.0, 0.0, -0.5}; // diagonal mixing
    Tensor<double> b(Shape{2});
    Tape<double> tape;
    auto out = tape.conv2d(tape.leaf(x), tape.leaf(w), tape.leaf(b), 1, 0);
    for (int y = 0; y < 4; ++y)
        for (int xq = 0; xq < 4; ++xq) {
            CHECK(tape.val(out).at3(0, y, xq) == doctest::Approx(2.0 * x.at3(0, y, xq)));
            CHECK(tape.val(out).at3(1, y, xq) == doctest::Approx(-0.5 * x.at3(1, y, xq)));
        }
}

TEST_CASE("delta kernel with padding preserves the input") {
    auto x = random_tensor<double>({1, 6, 6}, 14);
    Tensor<double> w(Shape{1, 1, 3, 3});
    w.data[4] = 1.0; // center tap
    Tensor<double> b(Shape{1});
    Tape<double> tape;
    auto out = tape.conv2d(tape.leaf(x), tape.leaf(w), tape.leaf(b), 1, 1);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(tape.val(out)[i] == x[i]);
}

TEST_CASE("resblock with zero convolutions is the identity") {
    auto x = random_tensor<double>({3, 6, 6}, 15);
    Tensor<double> w1(Shape{3, 3, 3, 3}), b1(Shape{3}), w2(Shape{3, 3, 3, 3}), b2(Shape{3});
    Tape<double> tape;
    auto out = resblock(tape, tape.leaf(x), tape.leaf(w1), tape.leaf(b1), tape.leaf(w2),
                        tape.leaf(b2));
    CHECK(tape.val(out).data == x.data);
}

TEST_CASE("resblock preserves shape and passes the gradient check") {
    ParamStore<double> params = init_params<double>(
        3, {{"w1", {2, 2, 3, 3}, Init::he},
            {"b1", {2}, Init::zero},
            {"w2", {2, 2, 3, 3}, Init::he},
            {"b2", {2}, Init::zero}});
    auto x = random_tensor<double>({2, 4, 4}, 16);
    auto u = random_tensor<double>({2, 4, 4}, 17);
    auto fn = [&](const ParamStore<double>& p, ParamStore<double>* g) {
        Tape<double> tape;
        ParamRefs<double> refs(tape, p, g != nullptr);
        auto out = resblock(tape, tape.leaf(x), refs["w1"], refs["b1"], refs["w2"], refs["b2"]);
        CHECK(tape.val(out).shape == x.shape);
        auto loss = tape.dot(out, tape.leaf(u));
        if (g) {
            tape.backward(loss);
            refs.grads(*g);
        }
        return tape.val(loss)[0];
    };
    const auto report = grad_check(fn, params, 1e-5);
    CHECK(report.passed(1e-4));
}

TEST_CASE("global average pool") {
    Tensor<double> c(Shape{2, 3, 3});
    std::fill_n(c.data.begin(), 9, 0.75);
    Rng rng(18);
    double sum = 0.0;
    for (int i = 0; i < 9; ++i) {
        c.data[9 + i] = rng.normal();
        sum += c.data[9 + i];
    }
    Tape<double> tape;
    auto out = tape.global_avg_pool(tape.leaf(c));
    CHECK(tape.val(out)[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(tape.val(out)[1] == doctest::Approx(sum / 9.0).epsilon(1e-7));

    // 1x1 spatial input is the identity on channels
    auto tiny = random_tensor<double>({4, 1, 1}, 19);
    Tape<double> tape2;
    auto out2 = tape2.global_avg_pool(tape2.leaf(tiny));
    CHECK(tape2.val(out2).data == tiny.data);
}

TEST_CASE("avg_pool2 halves dimensions and averages quads") {
    Tensor<double> x(Shape{1, 2, 4});
    x.data = {1, 2, 3, 4, 5, 6, 7, 8};
    Tape<double> tape;
    auto out = tape.avg_pool2(tape.leaf(x));
    REQUIRE(tape.val(out).shape == Shape{1, 1, 2});
    CHECK(tape.val(out)[0] == doctest::Approx((1 + 2 + 5 + 6) / 4.0));
    CHECK(tape.val(out)[1] == doctest::Approx((3 + 4 + 7 + 8) / 4.0));

    Tensor<double> odd(Shape{1, 3, 4});
    Tape<double> tape2;
    CHECK_THROWS_AS(tape2.avg_pool2(tape2.leaf(odd)), ShapeError);
}

TEST_CASE("linear layer basics and relu") {
    Tensor<double> w(Shape{3, 3});
    w.data = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    Tensor<double> b(Shape{3});
    Tensor<double> x(Shape{3});
    x.data = {0.5, -1.0, 2.0};
    Tape<double> tape;
    auto out = tape.linear(tape.leaf(x), tape.leaf(w), tape.leaf(b));
    CHECK(tape.val(out).data == x.data);

    auto r = tape.relu(out);
    CHECK(tape.val(r).data == std::vector<double>{0.5, 0.0, 2.0});
}

TEST_CASE("linear gradient check") {
    ParamStore<double> params =
        init_params<double>(5, {{"w", {4, 6}, Init::he}, {"b", {4}, Init::zero}});
    auto x = random_tensor<double>({6}, 20);
    auto u = random_tensor<double>({4}, 21);
    auto fn = [&](const ParamStore<double>& p, ParamStore<double>* g) {
        Tape<double> tape;
        ParamRefs<double> refs(tape, p, g != nullptr);
        auto out = tape.linear(tape.leaf(x), refs["w"], refs["b"]);
        auto loss = tape.dot(out, tape.leaf(u));
        if (g) {
            tape.backward(loss);
            refs.grads(*g);
        }
        return tape.val(loss)[0];
    };
    const auto report = grad_check(fn, params, 1e-5);
    CHECK(report.passed(1e-6)); // linear map: finite differences are near-exact
}

TEST_CASE("a sabotaged gradient is detected with relative error about one") {
    ParamStore<double> params = init_params<double>(7, {{"w", {3, 3}, Init::he}});
    auto x = random_tensor<double>({3}, 22);
    auto u = random_tensor<double>({3}, 23);
    auto fn = [&](const ParamStore<double>& p, ParamStore<double>* g) {
        Tape<double> tape;
        ParamRefs<double> refs(tape, p, g != nullptr);
        auto out = tape.linear(tape.leaf(x), refs["w"]);
        auto loss = tape.dot(out, tape.leaf(u));
        if (g) {
            tape.backward(loss);
            refs.grads(*g);
            for (auto& [_, t] : *g)
                for (auto& v : t.data) v *= 2.0; // deliberately wrong by 2x
        }
        return tape.val(loss)[0];
    };
    const auto report = grad_check(fn, params, 1e-5);
    CHECK(!report.passed(1e-4));
    CHECK(report.max_rel_err() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("init_params is deterministic, He-scaled, and honors zero init") {
    const std::vector<ParamSpec> specs{{"conv.w", {8, 64, 3, 3}, Init::he},
                                       {"conv.b", {8}, Init::zero}};
    const auto a = init_params<double>(42, specs);
    const auto b = init_params<double>(42, specs);
    const auto c = init_params<double>(43, specs);
    CHECK(a.at("conv.w").data == b.at("conv.w").data);
    CHECK(a.at("conv.w").data != c.at("conv.w").data);
    for (double v : a.at("conv.b").data) CHECK(v == 0.0);

    // sample variance close to 2 / fan_in
    const auto& w = a.at("conv.w");
    double mean = 0.0;
    for (double v : w.data) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double v : w.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size());
    const double expect = 2.0 / (64.0 * 3.0 * 3.0);
    CHECK(var > 0.8 * expect);
    CHECK(var < 1.2 * expect);
}

TEST_CASE("parameter files round-trip bit-exactly") {
    test::TempDir tmp("params");
    ParamStore<float> store;
    Rng rng(31);
    Tensor<float> t1(Shape{3, 4});
    for (auto& v : t1.data) v = static_cast<float>(rng.normal());
    Tensor<float> t2(Shape{7});
    for (auto& v : t2.data) v = static_cast<float>(rng.normal());
    store.add("layer.w", std::move(t1));
    store.add("layer.b", std::move(t2));

    const std::string path = tmp.path("model.params");
    save_params(store, path);
    const auto back = load_params<float>(path);
    CHECK(back.size() == 2);
    CHECK(back.at("layer.w").shape == Shape{3, 4});
    CHECK(back.at("layer.w").data == store.at("layer.w").data);
    CHECK(back.at("layer.b").data == store.at("layer.b").data);

    // dtype mismatch is rejected
    CHECK_THROWS_AS(load_params<double>(path), FormatError);
}

TEST_CASE("adam trajectory is deterministic") {
    auto run = [] {
        ParamStore<float> p = init_params<float>(1, {{"w", {8}, Init::he}});
        Adam<float> opt(1e-2);
        ParamStore<float> g = p.zeros_like();
        Rng rng(2);
        for (int step = 0; step < 50; ++step) {
            for (auto& v : g.at("w").data) v = static_cast<float>(rng.normal());
            opt.step(p, g);
        }
        return p.at("w").data;
    };
    CHECK(run() == run());
}

TEST_CASE("adam descends a quadratic") {
    ParamStore<float> p;
    Tensor<float> w(Shape{4});
    w.data = {2.0f, -3.0f, 1.5f, -0.5f};
    p.add("w", std::move(w));
    Adam<float> opt(5e-2);
    ParamStore<float> g = p.zeros_like();
    for (int step = 0; step < 400; ++step) {
        for (int i = 0; i < 4; ++i) g.at("w")[i] = 2.0f * p.at("w")[i];
        opt.step(p, g);
    }
    for (float v : p.at("w").data) CHECK(std::abs(v) < 1e-3f);
}
