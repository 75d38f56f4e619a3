#pragma once

#include <string>

#include "sdp/diffusion.hpp"
#include "sdp/nn.hpp"

namespace sdp {

// Ablation modes for the prior injector; `none` is the no-prior control.
enum class SpimMode { both, mul_only, add_only, none };

const char* to_string(SpimMode mode);
SpimMode parse_spim_mode(const std::string& s); // "both" | "mul" | "add" | "none"

// Two bias-free projections turning the prior vector into per-channel scale
// and shift. Zero initialization makes the injection start as the identity.
struct SpimConfig {
    int channels = 0;  // C of the modulated feature maps
    int prior_len = 0; // P = 4C'
    SpimMode mode = SpimMode::both;

    void validate() const {
        if (channels < 1 || prior_len < 1) throw ConfigError("spim: bad dims");
    }
};

inline std::vector<ParamSpec> spim_param_specs(const SpimConfig& cfg) {
    cfg.validate();
    return {
        {"spim.w1", {cfg.channels, cfg.prior_len}, Init::zero},
        {"spim.w2", {cfg.channels, cfg.prior_len}, Init::zero},
    };
}

// F' = (W1 sdp) .* F + W2 sdp + F, restricted per mode. The same projections
// are shared by every injection site.
template <typename T>
typename Tape<T>::Ref spim_inject(Tape<T>& tape, ParamRefs<T>& p, typename Tape<T>::Ref f,
                                  typename Tape<T>::Ref sdp, const SpimConfig& cfg) {
    cfg.validate();
    if (cfg.mode == SpimMode::none) return f;
    if (tape.val(sdp).size() != cfg.prior_len) throw ShapeError("spim: prior length mismatch");
    if (tape.val(f).shape.size() != 3 || tape.val(f).dim(0) != cfg.channels)
        throw ShapeError("spim: feature channels mismatch");
    const bool use_mul = cfg.mode != SpimMode::add_only;
    const bool use_add = cfg.mode != SpimMode::mul_only;
    auto s = use_mul ? tape.linear(sdp, p["spim.w1"]) : Tape<T>::none;
    auto b = use_add ? tape.linear(sdp, p["spim.w2"]) : Tape<T>::none;
    return tape.channel_affine(f, s, b, use_mul, use_add);
}

// Non-tape convenience form.
Tensor<float> spim_inject(const Tensor<float>& f, const std::vector<float>& sdp,
                          const ParamStore<float>& params, const SpimConfig& cfg);

// ---------------------------------------------------------------------------
// Plug-in reconstructor: stem conv -> [resblock -> injection]*K -> head conv.
// Input and output cubes share dimensions.
// ---------------------------------------------------------------------------

struct ReconConfig {
    int bands = 0;
    int channels = 32;
    int blocks = 4;
    SpimConfig spim; // channels must equal `channels`

    void validate() const {
        if (bands < 1 || channels < 1 || blocks < 1) throw ConfigError("recon: bad dims");
        if (spim.channels != channels) throw ConfigError("recon: spim channel mismatch");
    }
};

std::vector<ParamSpec> recon_param_specs(const ReconConfig& cfg);

template <typename T>
typename Tape<T>::Ref recon_forward(Tape<T>& tape, ParamRefs<T>& recon_p, ParamRefs<T>& spim_p,
                                    typename Tape<T>::Ref h_init, typename Tape<T>::Ref sdp,
                                    const ReconConfig& cfg) {
    cfg.validate();
    if (tape.val(h_init).shape.size() != 3 || tape.val(h_init).dim(0) != cfg.bands)
        throw ShapeError("recon: input band mismatch");
    auto x = tape.relu(tape.conv2d(h_init, recon_p["recon.stem.w"], recon_p["recon.stem.b"], 1, 1));
    for (int i = 0; i < cfg.blocks; ++i) {
        const std::string pre = "recon.block" + std::to_string(i);
        x = resblock(tape, x, recon_p[pre + ".w1"], recon_p[pre + ".b1"], recon_p[pre + ".w2"],
                     recon_p[pre + ".b2"]);
        x = spim_inject(tape, spim_p, x, sdp, cfg.spim);
    }
    return tape.conv2d(x, recon_p["recon.head.w"], recon_p["recon.head.b"], 1, 1);
}

// Non-tape convenience form; output dims equal input dims, values unclipped.
SpectralCube recon_forward(const SpectralCube& h_init, const std::vector<float>& sdp,
                           const ParamStore<float>& recon_params,
                           const ParamStore<float>& spim_params, const ReconConfig& cfg);

} // namespace sdp
