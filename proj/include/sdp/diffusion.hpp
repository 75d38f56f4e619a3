#pragma once

#include <functional>
#include <vector>

#include "sdp/hfe.hpp"
#include "sdp/nn.hpp"
#include "sdp/rng.hpp"

namespace sdp {

// beta_t / alpha_t / alpha_bar_t sequences for the short forward process.
// Indexing: beta[t-1] holds beta_t for t in [1, T]; alpha_bar_at(0) == 1.
struct NoiseSchedule {
    int steps = 4;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    double beta_at(int t) const { return beta[check(t)]; }
    double alpha_at(int t) const { return alpha[check(t)]; }
    double alpha_bar_at(int t) const {
        if (t == 0) return 1.0;
        return alpha_bar[check(t)];
    }

  private:
    size_t check(int t) const {
        if (t < 1 || t > steps) throw ConfigError("schedule: t out of range");
        return static_cast<size_t>(t - 1);
    }
};

// Linear beta ramp; defaults (4, 0.1, 0.99) push alpha_bar_T below 0.01 so the
// terminal state is noise-dominated even at 4 steps.
NoiseSchedule make_schedule(int steps = 4, double beta_start = 0.1, double beta_end = 0.99);

// x_t = sqrt(1 - beta_t) * x_prev + sqrt(beta_t) * eps
template <typename T>
std::vector<T> q_step(const std::vector<T>& x_prev, int t, const std::vector<T>& eps,
                      const NoiseSchedule& s) {
    if (x_prev.size() != eps.size()) throw ShapeError("q_step: length mismatch");
    const T a = static_cast<T>(std::sqrt(1.0 - s.beta_at(t)));
    const T b = static_cast<T>(std::sqrt(s.beta_at(t)));
    std::vector<T> out(x_prev.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a * x_prev[i] + b * eps[i];
    return out;
}

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps
template <typename T>
std::vector<T> q_sample(const std::vector<T>& x0, int t, const std::vector<T>& eps,
                        const NoiseSchedule& s) {
    if (x0.size() != eps.size()) throw ShapeError("q_sample: length mismatch");
    const T a = static_cast<T>(std::sqrt(s.alpha_bar_at(t)));
    const T b = static_cast<T>(std::sqrt(1.0 - s.alpha_bar_at(t)));
    std::vector<T> out(x0.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

// sigma_t^2 = beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t); sigma_1 == 0
double posterior_sigma(const NoiseSchedule& s, int t);

// x_{t-1} = mu_t + sigma_t * z with
// mu_t = (x_t - eps_hat * (1 - alpha_t) / sqrt(1 - alpha_bar_t)) / sqrt(alpha_t)
template <typename T>
std::vector<T> posterior_step(const std::vector<T>& x_t, const std::vector<T>& eps_hat, int t,
                              const NoiseSchedule& s, const std::vector<T>& z) {
    if (x_t.size() != eps_hat.size() || x_t.size() != z.size())
        throw ShapeError("posterior_step: length mismatch");
    const double alpha = s.alpha_at(t);
    const double coeff = (1.0 - alpha) / std::sqrt(1.0 - s.alpha_bar_at(t));
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double sigma = posterior_sigma(s, t);
    std::vector<T> out(x_t.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double mu = inv_sqrt_alpha * (static_cast<double>(x_t[i]) - coeff * eps_hat[i]);
        out[i] = static_cast<T>(mu + sigma * z[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conditional MLP denoiser over concat(x_t, time embedding, HF_M).
// ---------------------------------------------------------------------------

struct DenoiserConfig {
    int feature_len = 0;             // length of x_t and of the output
    int cond_len = 0;                // length of the conditioning feature
    int time_embed_dim = 16;         // sinusoidal embedding size (even)
    std::vector<int> hidden = {256, 256};

    void validate() const {
        if (feature_len < 1 || cond_len < 0) throw ConfigError("denoiser: bad lengths");
        if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
            throw ConfigError("denoiser: time_embed_dim must be even and >= 2");
        if (hidden.empty()) throw ConfigError("denoiser: needs at least one hidden layer");
    }
    int input_len() const { return feature_len + time_embed_dim + cond_len; }
};

std::vector<ParamSpec> denoiser_param_specs(const DenoiserConfig& cfg);
std::vector<double> time_embedding(int t, int dim);

template <typename T>
typename Tape<T>::Ref denoiser_forward(Tape<T>& tape, ParamRefs<T>& p,
                                       typename Tape<T>::Ref x_t, int t,
                                       typename Tape<T>::Ref cond, const DenoiserConfig& cfg) {
    cfg.validate();
    if (tape.val(x_t).size() != cfg.feature_len)
        throw ShapeError("denoiser: x_t length mismatch");
    if (tape.val(cond).size() != cfg.cond_len)
        throw ShapeError("denoiser: conditioning length mismatch");
    const auto emb_d = time_embedding(t, cfg.time_embed_dim);
    Tensor<T> emb(Shape{cfg.time_embed_dim});
    for (int i = 0; i < cfg.time_embed_dim; ++i) emb[i] = static_cast<T>(emb_d[static_cast<size_t>(i)]);
    auto x = tape.concat({x_t, tape.leaf(std::move(emb)), cond});
    for (size_t li = 0; li < cfg.hidden.size(); ++li) {
        const std::string pre = "den.fc" + std::to_string(li);
        x = tape.relu(tape.linear(x, p[pre + ".w"], p[pre + ".b"]));
    }
    return tape.linear(x, p["den.out.w"], p["den.out.b"]);
}

// Pure forward pass used by the sampler and tests.
std::vector<float> denoiser_predict(const std::vector<float>& x_t, int t,
                                    const std::vector<float>& cond,
                                    const ParamStore<float>& params, const DenoiserConfig& cfg);

// Vector generated by the reverse process; approximates the stage-1 feature.
struct SpectralDiffusionPrior {
    std::vector<float> values;
};

// Ancestral sampler over a pluggable denoiser. Draw order is fixed: x_T first,
// then one fresh z per step t = T..2; the final step is deterministic.
// denoise(x_t, t) -> eps_hat.
template <typename T>
std::vector<T> sample_prior(const std::function<std::vector<T>(const std::vector<T>&, int)>& denoise,
                            int len, const NoiseSchedule& s, uint64_t seed) {
    Rng rng(mix_seed({seed, hash_str("sdp-sampler")}));
    std::vector<T> x(static_cast<size_t>(len));
    for (auto& v : x) v = static_cast<T>(rng.normal());
    for (int t = s.steps; t >= 1; --t) {
        const std::vector<T> eps_hat = denoise(x, t);
        std::vector<T> z(x.size(), T(0));
        if (t > 1)
            for (auto& v : z) v = static_cast<T>(rng.normal());
        x = posterior_step(x, eps_hat, t, s, z);
        for (const T v : x)
            if (!std::isfinite(static_cast<double>(v)))
                throw NumericError("sample_prior: non-finite state at t=" + std::to_string(t));
    }
    return x;
}

SpectralDiffusionPrior sample_sdp(const HsiFeature& hf_m, const ParamStore<float>& params,
                                  const DenoiserConfig& cfg, const NoiseSchedule& s,
                                  uint64_t seed);

// Standalone epsilon-prediction objective: MSE(eps, denoiser(q_sample(x0,t,eps), t, cond)).
// Gradients flow to the denoiser parameters only; x0 and the conditioning are
// treated as constants here (training wires the conditioning through a live
// tape so the measurement stem can learn).
template <typename T>
double diffusion_loss(const std::vector<T>& x0, const std::vector<T>& cond, int t,
                      const std::vector<T>& eps, const NoiseSchedule& s,
                      const ParamStore<T>& params, const DenoiserConfig& cfg,
                      ParamStore<T>* grads = nullptr) {
    if (static_cast<int>(x0.size()) != cfg.feature_len)
        throw ShapeError("diffusion_loss: x0 length mismatch");
    std::vector<T> x_t = q_sample(x0, t, eps, s);
    Tape<T> tape;
    ParamRefs<T> refs(tape, params, grads != nullptr);
    auto x_leaf = tape.leaf(Tensor<T>(Shape{cfg.feature_len}, std::move(x_t)));
    auto cond_leaf = tape.leaf(Tensor<T>(Shape{cfg.cond_len}, cond));
    auto pred = denoiser_forward(tape, refs, x_leaf, t, cond_leaf, cfg);
    auto eps_leaf = tape.leaf(Tensor<T>(Shape{cfg.feature_len}, eps));
    auto loss = tape.mse(pred, eps_leaf);
    if (grads) {
        tape.backward(loss);
        refs.grads(*grads);
    }
    return static_cast<double>(tape.val(loss)[0]);
}

} // namespace sdp
