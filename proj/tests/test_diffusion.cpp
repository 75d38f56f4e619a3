#include <cmath>

#include "doctest.h"
#include "sdp/diffusion.hpp"
#include "sdp/grad_check.hpp"

using namespace sdp;

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
    std::vector<double> v(n);
    Rng rng(seed);
    for (auto& x : v) x = rng.normal();
    return v;
}

std::vector<float> random_float_vec(size_t n, uint64_t seed) {
    std::vector<float> v(n);
    Rng rng(seed);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

} // namespace

TEST_CASE("default schedule matches hand-derived values") {
    const NoiseSchedule s = make_schedule();
    REQUIRE(s.steps == 4);
    // linear spacing 0.1 .. 0.99
    CHECK(s.beta_at(1) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.beta_at(2) == doctest::Approx(0.396667).epsilon(1e-5));
    CHECK(s.beta_at(3) == doctest::Approx(0.693333).epsilon(1e-5));
    CHECK(s.beta_at(4) == doctest::Approx(0.99).epsilon(1e-12));
    // cumulative products
    CHECK(std::abs(s.alpha_bar_at(1) - 0.9) < 1e-5);
    CHECK(std::abs(s.alpha_bar_at(2) - 0.543) < 1e-5);
    CHECK(std::abs(s.alpha_bar_at(3) - 0.166517) < 1e-5);
    CHECK(std::abs(s.alpha_bar_at(4) - 0.00166517) < 1e-5);
    CHECK(s.alpha_bar_at(0) == 1.0);
    // terminal state is noise-dominated
    CHECK(s.alpha_bar_at(4) <= 0.01);
}

TEST_CASE("degenerate and invalid schedules") {
    const NoiseSchedule s = make_schedule(1, 0.25, 0.75);
    CHECK(s.beta == std::vector<double>{0.25});
    CHECK_THROWS_AS(make_schedule(4, 0.0, 0.5), ConfigError);
    CHECK_THROWS_AS(make_schedule(4, 0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(make_schedule(4, 0.9, 0.1), ConfigError);
    CHECK_THROWS_AS(make_schedule(0, 0.1, 0.9), ConfigError);
}

TEST_CASE("schedule identity: products and composed variance") {
    const NoiseSchedule s = make_schedule();
    double coeff = 1.0; // product of sqrt(1 - beta_i)
    double var = 0.0;   // composed variance of iterated single steps
    for (int t = 1; t <= s.steps; ++t) {
        coeff *= std::sqrt(1.0 - s.beta_at(t));
        var = (1.0 - s.beta_at(t)) * var + s.beta_at(t);
        CHECK(std::abs(coeff - std::sqrt(s.alpha_bar_at(t))) < 1e-12);
        CHECK(std::abs(var - (1.0 - s.alpha_bar_at(t))) < 1e-12);
    }
}

TEST_CASE("single forward step") {
    const NoiseSchedule s = make_schedule();
    const std::vector<double> x = {1.0, -2.0, 0.5};
    const std::vector<double> zero(3, 0.0);
    for (int t = 1; t <= 4; ++t) {
        const auto noiseless = q_step(x, t, zero, s);
        const double a = std::sqrt(1.0 - s.beta_at(t));
        for (size_t i = 0; i < x.size(); ++i)
            CHECK(noiseless[i] == doctest::Approx(a * x[i]).epsilon(1e-12));
    }
    std::vector<double> e1(3, 0.0);
    e1[0] = 1.0;
    const auto pure_noise = q_step(zero, 2, e1, s);
    CHECK(pure_noise[0] == doctest::Approx(std::sqrt(s.beta_at(2))).epsilon(1e-12));
    CHECK(pure_noise[1] == 0.0);
    CHECK_THROWS_AS(q_step(x, 5, zero, s), ConfigError);
    CHECK_THROWS_AS(q_step(x, 0, zero, s), ConfigError);
}

TEST_CASE("closed-form marginal") {
    const NoiseSchedule s = make_schedule();
    const std::vector<double> x0 = {0.3, -1.1, 2.0, 0.0};
    const std::vector<double> zero(4, 0.0);
    const auto noiseless = q_sample(x0, 3, zero, s);
    for (size_t i = 0; i < x0.size(); ++i)
        CHECK(noiseless[i] == doctest::Approx(std::sqrt(s.alpha_bar_at(3)) * x0[i]));

    // t = T: coefficient on x0 is sqrt(alpha_bar_T) ~ 0.0408
    CHECK(std::sqrt(s.alpha_bar_at(4)) == doctest::Approx(0.0408).epsilon(1e-3));

    // norm bound from the triangle inequality
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_vec(6, 100 + trial);
        const auto e = random_vec(6, 200 + trial);
        const int t = rng.uniform_int(1, 4);
        const auto xt = q_sample(a, t, e, s);
        auto norm = [](const std::vector<double>& v) {
            double acc = 0;
            for (double x : v) acc += x * x;
            return std::sqrt(acc);
        };
        const double bound = std::sqrt(s.alpha_bar_at(t)) * norm(a) +
                             std::sqrt(1.0 - s.alpha_bar_at(t)) * norm(e);
        CHECK(norm(xt) <= bound + 1e-12);
    }
}

TEST_CASE("posterior variance: sigma_1 is exactly zero, sigma_2 matches hand value") {
    const NoiseSchedule s = make_schedule();
    CHECK(posterior_sigma(s, 1) == 0.0);
    const double sigma2_sq = posterior_sigma(s, 2) * posterior_sigma(s, 2);
    CHECK(std::abs(sigma2_sq - 0.086798) < 1e-5);
}

TEST_CASE("posterior mean identity against the two-coefficient form") {
    const NoiseSchedule s = make_schedule();
    Rng rng(7);
    const std::vector<double> zero(5, 0.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x0 = random_vec(5, 1000 + trial);
        const auto eps = random_vec(5, 2000 + trial);
        const int t = rng.uniform_int(1, 4);
        const auto x_t = q_sample(x0, t, eps, s);
        const auto mu = posterior_step(x_t, eps, t, s, zero);

        const double ab_t = s.alpha_bar_at(t);
        const double ab_prev = s.alpha_bar_at(t - 1);
        const double c0 = std::sqrt(ab_prev) * s.beta_at(t) / (1.0 - ab_t);
        const double ct = std::sqrt(s.alpha_at(t)) * (1.0 - ab_prev) / (1.0 - ab_t);
        for (size_t i = 0; i < x0.size(); ++i)
            CHECK(std::abs(mu[i] - (c0 * x0[i] + ct * x_t[i])) < 1e-10);
    }
}

TEST_CASE("final reverse step ignores the noise argument") {
    const NoiseSchedule s = make_schedule();
    const auto x1 = random_vec(4, 11);
    const auto eps = random_vec(4, 12);
    const auto z = random_vec(4, 13);
    const std::vector<double> zero(4, 0.0);
    CHECK(posterior_step(x1, eps, 1, s, z) == posterior_step(x1, eps, 1, s, zero));
}

TEST_CASE("time embedding is sinusoidal and distinct per step") {
    const auto e1 = time_embedding(1, 16);
    const auto e2 = time_embedding(2, 16);
    REQUIRE(e1.size() == 16);
    CHECK(e1 != e2);
    for (double v : e1) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    CHECK(e1[0] == doctest::Approx(std::sin(1.0)));
    CHECK(e1[1] == doctest::Approx(std::cos(1.0)));
}

TEST_CASE("denoiser with a zero output layer predicts zero") {
    DenoiserConfig cfg{8, 8, 8, {16}};
    std::vector<ParamSpec> specs = denoiser_param_specs(cfg);
    for (auto& s : specs)
        if (s.name.rfind("den.out", 0) == 0) s.init = Init::zero;
    const auto params = init_params<float>(3, specs);
    const auto out = denoiser_predict(random_float_vec(8, 1), 2, random_float_vec(8, 2), params, cfg);
    for (float v : out) CHECK(v == 0.0f);
}

TEST_CASE("denoiser forward is deterministic") {
    DenoiserConfig cfg{8, 8, 8, {16, 16}};
    const auto params = init_params<float>(9, denoiser_param_specs(cfg));
    const auto x = random_float_vec(8, 4);
    const auto c = random_float_vec(8, 5);
    CHECK(denoiser_predict(x, 3, c, params, cfg) == denoiser_predict(x, 3, c, params, cfg));
}

TEST_CASE("sampler is deterministic per seed and returns the right length") {
    DenoiserConfig cfg{12, 12, 8, {16}};
    const auto params = init_params<float>(21, denoiser_param_specs(cfg));
    const NoiseSchedule s = make_schedule();
    HsiFeature hf;
    hf.values = random_float_vec(12, 6);
    const auto a = sample_sdp(hf, params, cfg, s, 77);
    const auto b = sample_sdp(hf, params, cfg, s, 77);
    const auto c = sample_sdp(hf, params, cfg, s, 78);
    CHECK(a.values.size() == 12);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
}

TEST_CASE("plant-and-recover: an oracle denoiser reproduces the planted x0") {
    const NoiseSchedule s = make_schedule();
    const int len = 16;
    std::vector<double> planted(static_cast<size_t>(len));
    Rng rng(31);
    for (auto& v : planted) v = rng.normal();

    std::function<std::vector<double>(const std::vector<double>&, int)> oracle =
        [&](const std::vector<double>& x_t, int t) {
            // exact noise that connects x_t to the planted x0 through the marginal
            const double a = std::sqrt(s.alpha_bar_at(t));
            const double b = std::sqrt(1.0 - s.alpha_bar_at(t));
            std::vector<double> eps(x_t.size());
            for (size_t i = 0; i < x_t.size(); ++i) eps[i] = (x_t[i] - a * planted[i]) / b;
            return eps;
        };

    const auto recovered = sample_prior<double>(oracle, len, s, 123);
    for (int i = 0; i < len; ++i) CHECK(std::abs(recovered[static_cast<size_t>(i)] - planted[static_cast<size_t>(i)]) < 1e-6);
}

TEST_CASE("diffusion loss: zero prediction gives mean(eps^2), matching denoiser gives zero") {
    DenoiserConfig cfg{8, 8, 8, {16}};
    std::vector<ParamSpec> specs = denoiser_param_specs(cfg);
    for (auto& sp : specs)
        if (sp.name.rfind("den.out", 0) == 0) sp.init = Init::zero;
    const auto params = init_params<double>(17, specs);
    const NoiseSchedule s = make_schedule();

    // zero noise and a zero-output denoiser agree exactly -> loss 0
    const std::vector<double> x0 = random_vec(8, 41);
    const std::vector<double> cond = random_vec(8, 42);
    const std::vector<double> zero(8, 0.0);
    CHECK(diffusion_loss(x0, cond, 2, zero, s, params, cfg) == 0.0);

    // with unit-normal noise the zero denoiser pays mean(eps^2) ~ 1
    Rng rng(55);
    double acc = 0.0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        std::vector<double> eps(8);
        for (auto& v : eps) v = rng.normal();
        const int t = rng.uniform_int(1, 4);
        acc += diffusion_loss(x0, cond, t, eps, s, params, cfg);
    }
    CHECK(acc / trials == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("diffusion loss gradient check") {
    DenoiserConfig cfg{6, 6, 4, {12}};
    ParamStore<double> params = init_params<double>(3, denoiser_param_specs(cfg));
    const NoiseSchedule s = make_schedule();
    Rng r(61);
    std::vector<double> x0(6), cond(6), eps(6);
    for (auto& v : x0) v = r.normal();
    for (auto& v : cond) v = r.normal();
    for (auto& v : eps) v = r.normal();
    auto fn = [&](const ParamStore<double>& p, ParamStore<double>* g) {
        return diffusion_loss(x0, cond, 3, eps, s, p, cfg, g);
    };
    const auto report = grad_check(fn, params, 1e-5);
    CHECK(report.passed(1e-4));
}
