#include "sdp/diffusion.hpp"

namespace sdp {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw ConfigError("schedule: steps must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.steps = steps;
    s.beta.resize(static_cast<size_t>(steps));
    s.alpha.resize(static_cast<size_t>(steps));
    s.alpha_bar.resize(static_cast<size_t>(steps));
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        s.beta[static_cast<size_t>(i)] = b;
        s.alpha[static_cast<size_t>(i)] = 1.0 - b;
        prod *= 1.0 - b;
        s.alpha_bar[static_cast<size_t>(i)] = prod;
    }
    return s;
}

double posterior_sigma(const NoiseSchedule& s, int t) {
    const double var =
        s.beta_at(t) * (1.0 - s.alpha_bar_at(t - 1)) / (1.0 - s.alpha_bar_at(t));
    return std::sqrt(var);
}

std::vector<ParamSpec> denoiser_param_specs(const DenoiserConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> specs;
    int in = cfg.input_len();
    for (size_t li = 0; li < cfg.hidden.size(); ++li) {
        const int out = cfg.hidden[li];
        const std::string p = "den.fc" + std::to_string(li);
        specs.push_back({p + ".w", {out, in}, Init::he});
        specs.push_back({p + ".b", {out}, Init::zero});
        in = out;
    }
    specs.push_back({"den.out.w", {cfg.feature_len, in}, Init::he});
    specs.push_back({"den.out.b", {cfg.feature_len}, Init::zero});
    return specs;
}

std::vector<double> time_embedding(int t, int dim) {
    std::vector<double> emb(static_cast<size_t>(dim));
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
        emb[static_cast<size_t>(2 * i)] = std::sin(t * freq);
        emb[static_cast<size_t>(2 * i + 1)] = std::cos(t * freq);
    }
    return emb;
}

std::vector<float> denoiser_predict(const std::vector<float>& x_t, int t,
                                    const std::vector<float>& cond,
                                    const ParamStore<float>& params, const DenoiserConfig& cfg) {
    Tape<float> tape;
    ParamRefs<float> refs(tape, params, /*trainable=*/false);
    auto x = tape.leaf(Tensor<float>(Shape{cfg.feature_len}, x_t));
    auto c = tape.leaf(Tensor<float>(Shape{cfg.cond_len}, cond));
    auto out = denoiser_forward(tape, refs, x, t, c, cfg);
    return tape.val(out).data;
}

SpectralDiffusionPrior sample_sdp(const HsiFeature& hf_m, const ParamStore<float>& params,
                                  const DenoiserConfig& cfg, const NoiseSchedule& s,
                                  uint64_t seed) {
    if (static_cast<int>(hf_m.values.size()) != cfg.cond_len)
        throw ShapeError("sample_sdp: conditioning length mismatch");
    std::function<std::vector<float>(const std::vector<float>&, int)> denoise =
        [&](const std::vector<float>& x_t, int t) {
            return denoiser_predict(x_t, t, hf_m.values, params, cfg);
        };
    SpectralDiffusionPrior prior;
    prior.values = sample_prior<float>(denoise, cfg.feature_len, s, seed);
    return prior;
}

} // namespace sdp
