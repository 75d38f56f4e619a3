#include "sdp/verify.hpp"

#include "sdp/diffusion.hpp"
#include "sdp/hfe.hpp"
#include "sdp/spim.hpp"

namespace sdp {

namespace {

Tensor<double> random_tensor(Shape shape, uint64_t seed, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
}

Tensor<double> uniform_tensor(Shape shape, uint64_t seed) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = rng.uniform();
    return t;
}

// scalarize a tape output against a fixed random direction
template <typename BuildFn>
LossFn directional(BuildFn build, Tensor<double> direction) {
    return [build, direction](const ParamStore<double>& p, ParamStore<double>* g) -> double {
        Tape<double> tape;
        ParamRefs<double> refs(tape, p, g != nullptr);
        auto out = build(tape, refs);
        auto loss = tape.dot(out, tape.leaf(direction));
        if (g) {
            tape.backward(loss);
            refs.grads(*g);
        }
        return tape.val(loss)[0];
    };
}

} // namespace

std::vector<NamedReport> gradient_battery(double epsilon) {
    std::vector<NamedReport> items;

    { // conv2d, stride 1 pad 1
        auto params = init_params<double>(3, {{"w", {3, 2, 3, 3}, Init::he}, {"b", {3}, Init::zero}});
        auto x = random_tensor({2, 6, 6}, 11);
        auto fn = directional(
            [x](Tape<double>& t, ParamRefs<double>& p) {
                return t.conv2d(t.leaf(x), p["w"], p["b"], 1, 1);
            },
            random_tensor({3, 6, 6}, 12));
        items.push_back({"conv2d", grad_check(fn, params, epsilon)});
    }
    { // strided conv without padding
        auto params = init_params<double>(4, {{"w", {2, 2, 3, 3}, Init::he}, {"b", {2}, Init::zero}});
        auto x = random_tensor({2, 7, 7}, 13);
        auto fn = directional(
            [x](Tape<double>& t, ParamRefs<double>& p) {
                return t.conv2d(t.leaf(x), p["w"], p["b"], 2, 0);
            },
            random_tensor({2, 3, 3}, 14));
        items.push_back({"conv2d_strided", grad_check(fn, params, epsilon)});
    }
    { // resblock (conv-relu-conv + skip)
        auto params = init_params<double>(3, {{"w1", {2, 2, 3, 3}, Init::he},
                                              {"b1", {2}, Init::zero},
                                              {"w2", {2, 2, 3, 3}, Init::he},
                                              {"b2", {2}, Init::zero}});
        auto x = random_tensor({2, 4, 4}, 16);
        auto fn = directional(
            [x](Tape<double>& t, ParamRefs<double>& p) {
                return resblock(t, t.leaf(x), p["w1"], p["b1"], p["w2"], p["b2"]);
            },
            random_tensor({2, 4, 4}, 17));
        items.push_back({"resblock", grad_check(fn, params, epsilon)});
    }
    { // linear + relu chain
        auto params = init_params<double>(6, {{"w1", {8, 6}, Init::he},
                                              {"b1", {8}, Init::zero},
                                              {"w2", {4, 8}, Init::he},
                                              {"b2", {4}, Init::zero}});
        Tensor<double> x = random_tensor({6}, 18);
        auto fn = directional(
            [x](Tape<double>& t, ParamRefs<double>& p) {
                auto h = t.relu(t.linear(t.leaf(x), p["w1"], p["b1"]));
                return t.linear(h, p["w2"], p["b2"]);
            },
            random_tensor({4}, 19));
        items.push_back({"linear_relu", grad_check(fn, params, epsilon)});
    }
    { // pooling path: avg_pool2 then global pool, weights upstream
        auto params = init_params<double>(8, {{"w", {3, 2, 3, 3}, Init::he}, {"b", {3}, Init::zero}});
        auto x = random_tensor({2, 8, 8}, 20);
        auto fn = directional(
            [x](Tape<double>& t, ParamRefs<double>& p) {
                auto c = t.conv2d(t.leaf(x), p["w"], p["b"], 1, 1);
                return t.global_avg_pool(t.avg_pool2(c));
            },
            random_tensor({3}, 21));
        items.push_back({"pooling", grad_check(fn, params, epsilon)});
    }
    { // full extractor
        const HfeConfig cfg{4, 2, 3};
        auto params = init_params<double>(7, hfe_param_specs(cfg));
        auto x = uniform_tensor({3, 8, 8}, 9);
        auto fn = directional(
            [x, cfg](Tape<double>& t, ParamRefs<double>& p) { return hfe_forward(t, p, t.leaf(x), cfg); },
            random_tensor({cfg.feature_len()}, 10));
        items.push_back({"hfe", grad_check(fn, params, epsilon)});
    }
    { // denoiser through the noise-prediction objective
        const DenoiserConfig cfg{6, 6, 4, {12}};
        auto params = init_params<double>(3, denoiser_param_specs(cfg));
        const NoiseSchedule sched = make_schedule();
        Rng r(61);
        std::vector<double> x0(6), cond(6), eps(6);
        for (auto& v : x0) v = r.normal();
        for (auto& v : cond) v = r.normal();
        for (auto& v : eps) v = r.normal();
        auto fn = [=](const ParamStore<double>& p, ParamStore<double>* g) {
            return diffusion_loss(x0, cond, 3, eps, sched, p, cfg, g);
        };
        items.push_back({"denoiser", grad_check(fn, params, epsilon)});
    }
    { // reconstructor including both injection projections
        const ReconConfig cfg{2, 4, 2, SpimConfig{4, 6, SpimMode::both}};
        ParamStore<double> all;
        for (const auto& [k, t] : init_params<double>(6, recon_param_specs(cfg))) all.add(k, t);
        ParamStore<double> spim = init_params<double>(22, spim_param_specs(cfg.spim));
        Rng wr(23);
        for (auto& v : spim.at("spim.w1").data) v = 0.1 * wr.normal();
        for (auto& v : spim.at("spim.w2").data) v = 0.1 * wr.normal();
        for (const auto& [k, t] : spim) all.add(k, t);
        Rng rng(24);
        Tensor<double> h(Shape{2, 6, 6});
        for (auto& v : h.data) v = rng.uniform();
        Tensor<double> prior(Shape{6});
        for (auto& v : prior.data) v = rng.normal();
        auto fn = directional(
            [h, prior, cfg](Tape<double>& t, ParamRefs<double>& p) {
                return recon_forward(t, p, p, t.leaf(h), t.leaf(prior), cfg);
            },
            random_tensor({2, 6, 6}, 25));
        items.push_back({"recon_spim", grad_check(fn, all, epsilon)});
    }
    return items;
}

} // namespace sdp
