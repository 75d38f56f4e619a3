#include "sdp/spim.hpp"

namespace sdp {

const char* to_string(SpimMode mode) {
    switch (mode) {
        case SpimMode::both: return "both";
        case SpimMode::mul_only: return "mul";
        case SpimMode::add_only: return "add";
        case SpimMode::none: return "none";
    }
    return "?";
}

SpimMode parse_spim_mode(const std::string& s) {
    if (s == "both") return SpimMode::both;
    if (s == "mul") return SpimMode::mul_only;
    if (s == "add") return SpimMode::add_only;
    if (s == "none") return SpimMode::none;
    throw ConfigError("unknown spim mode '" + s + "' (expected both|mul|add|none)");
}

Tensor<float> spim_inject(const Tensor<float>& f, const std::vector<float>& sdp,
                          const ParamStore<float>& params, const SpimConfig& cfg) {
    Tape<float> tape;
    ParamRefs<float> refs(tape, params, /*trainable=*/false);
    auto fr = tape.leaf(f);
    auto sr = tape.leaf(Tensor<float>(Shape{cfg.prior_len}, sdp));
    auto out = spim_inject(tape, refs, fr, sr, cfg);
    return tape.val(out);
}

std::vector<ParamSpec> recon_param_specs(const ReconConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> specs;
    specs.push_back({"recon.stem.w", {cfg.channels, cfg.bands, 3, 3}, Init::he});
    specs.push_back({"recon.stem.b", {cfg.channels}, Init::zero});
    for (int i = 0; i < cfg.blocks; ++i) {
        const std::string p = "recon.block" + std::to_string(i);
        specs.push_back({p + ".w1", {cfg.channels, cfg.channels, 3, 3}, Init::he});
        specs.push_back({p + ".b1", {cfg.channels}, Init::zero});
        specs.push_back({p + ".w2", {cfg.channels, cfg.channels, 3, 3}, Init::he});
        specs.push_back({p + ".b2", {cfg.channels}, Init::zero});
    }
    specs.push_back({"recon.head.w", {cfg.bands, cfg.channels, 3, 3}, Init::he});
    specs.push_back({"recon.head.b", {cfg.bands}, Init::zero});
    return specs;
}

SpectralCube recon_forward(const SpectralCube& h_init, const std::vector<float>& sdp,
                           const ParamStore<float>& recon_params,
                           const ParamStore<float>& spim_params, const ReconConfig& cfg) {
    Tape<float> tape;
    ParamRefs<float> recon_refs(tape, recon_params, /*trainable=*/false);
    ParamRefs<float> spim_refs(tape, spim_params, /*trainable=*/false);
    auto h = tape.leaf(cube_to_tensor<float>(h_init));
    auto s = tape.leaf(Tensor<float>(Shape{cfg.spim.prior_len}, sdp));
    auto out = recon_forward(tape, recon_refs, spim_refs, h, s, cfg);
    return tensor_to_cube(tape.val(out));
}

} // namespace sdp
