#pragma once

#include <vector>

#include "sdp/nn.hpp"

namespace sdp {

// Convolutional encoder that compresses a cube (or a cube pair) into a
// length-4C' vector. Interleaved 2x average pooling plus the final global
// average pool make the output length independent of spatial resolution.
struct HfeConfig {
    int base_channels = 16; // C'
    int num_resblocks = 4;
    int input_bands = 0; // stem input channels: L for the measurement stem, 2L for the pair stem

    int feature_len() const { return 4 * base_channels; }

    // channel schedule after block i: C' -> 2C' -> 4C' -> 4C' -> ...
    std::vector<int> channel_schedule() const {
        std::vector<int> ch(static_cast<size_t>(num_resblocks) + 1);
        ch[0] = base_channels;
        for (int i = 1; i <= num_resblocks; ++i)
            ch[static_cast<size_t>(i)] = std::min(2 * ch[static_cast<size_t>(i) - 1], feature_len());
        return ch;
    }

    void validate() const {
        if (base_channels < 1) throw ConfigError("hfe: base_channels must be >= 1");
        if (num_resblocks < 1) throw ConfigError("hfe: num_resblocks must be >= 1");
        if (input_bands < 1) throw ConfigError("hfe: input_bands must be >= 1");
    }
};

enum class FeatureSource { ground_truth_conditioned, measurement_only };

// Compact per-scene feature, length 4C'.
struct HsiFeature {
    std::vector<float> values;
    FeatureSource source = FeatureSource::measurement_only;
};

inline std::vector<ParamSpec> hfe_param_specs(const HfeConfig& cfg) {
    cfg.validate();
    const auto ch = cfg.channel_schedule();
    std::vector<ParamSpec> specs;
    specs.push_back({"hfe.stem.w", {ch[0], cfg.input_bands, 3, 3}, Init::he});
    specs.push_back({"hfe.stem.b", {ch[0]}, Init::zero});
    for (int i = 0; i < cfg.num_resblocks; ++i) {
        const int c = ch[static_cast<size_t>(i)];
        const int cn = ch[static_cast<size_t>(i) + 1];
        const std::string p = "hfe.block" + std::to_string(i);
        specs.push_back({p + ".res.w1", {c, c, 3, 3}, Init::he});
        specs.push_back({p + ".res.b1", {c}, Init::zero});
        specs.push_back({p + ".res.w2", {c, c, 3, 3}, Init::he});
        specs.push_back({p + ".res.b2", {c}, Init::zero});
        specs.push_back({p + ".trans.w", {cn, c, 1, 1}, Init::he});
        specs.push_back({p + ".trans.b", {cn}, Init::zero});
    }
    specs.push_back({"hfe.head.w", {cfg.feature_len(), ch.back()}, Init::he});
    specs.push_back({"hfe.head.b", {cfg.feature_len()}, Init::zero});
    return specs;
}

// stem conv -> [resblock, 2x avg pool, 1x1 transition]* -> global pool -> projection
template <typename T>
typename Tape<T>::Ref hfe_forward(Tape<T>& tape, ParamRefs<T>& p, typename Tape<T>::Ref input,
                                  const HfeConfig& cfg) {
    const auto& in_shape = tape.val(input).shape;
    if (in_shape.size() != 3 || in_shape[0] != cfg.input_bands)
        throw ShapeError("hfe: input channels do not match stem");
    const int side = 1 << cfg.num_resblocks;
    if (in_shape[1] % side != 0 || in_shape[2] % side != 0 || in_shape[1] < side ||
        in_shape[2] < side)
        throw ShapeError("hfe: spatial dims must be a positive multiple of 2^num_resblocks");

    auto x = tape.relu(tape.conv2d(input, p["hfe.stem.w"], p["hfe.stem.b"], 1, 1));
    for (int i = 0; i < cfg.num_resblocks; ++i) {
        const std::string pre = "hfe.block" + std::to_string(i);
        x = resblock(tape, x, p[pre + ".res.w1"], p[pre + ".res.b1"], p[pre + ".res.w2"],
                     p[pre + ".res.b2"]);
        x = tape.avg_pool2(x);
        x = tape.relu(tape.conv2d(x, p[pre + ".trans.w"], p[pre + ".trans.b"], 1, 0));
    }
    auto pooled = tape.global_avg_pool(x);
    return tape.linear(pooled, p["hfe.head.w"], p["hfe.head.b"]);
}

// Feature from the (initialized cube, ground truth) pair; stem takes 2L bands.
HsiFeature hfe_gt(const SpectralCube& h_init, const SpectralCube& g,
                  const ParamStore<float>& params, const HfeConfig& cfg);

// Feature from the initialized cube alone; stem takes L bands.
HsiFeature hfe_meas(const SpectralCube& h_init, const ParamStore<float>& params,
                    const HfeConfig& cfg);

} // namespace sdp
