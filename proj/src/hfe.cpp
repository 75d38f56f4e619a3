#include "sdp/hfe.hpp"

namespace sdp {

namespace {

HsiFeature run_hfe(Tensor<float> input, const ParamStore<float>& params, const HfeConfig& cfg,
                   FeatureSource source) {
    Tape<float> tape;
    ParamRefs<float> refs(tape, params, /*trainable=*/false);
    auto in = tape.leaf(std::move(input));
    auto out = hfe_forward(tape, refs, in, cfg);
    HsiFeature f;
    f.values = tape.val(out).data;
    f.source = source;
    return f;
}

} // namespace

HsiFeature hfe_gt(const SpectralCube& h_init, const SpectralCube& g,
                  const ParamStore<float>& params, const HfeConfig& cfg) {
    if (!same_dims(h_init, g)) throw ShapeError("hfe_gt: cube dims differ");
    if (cfg.input_bands != 2 * h_init.bands)
        throw ShapeError("hfe_gt: params built for a different band count");
    return run_hfe(concat_cubes<float>(h_init, g), params, cfg,
                   FeatureSource::ground_truth_conditioned);
}

HsiFeature hfe_meas(const SpectralCube& h_init, const ParamStore<float>& params,
                    const HfeConfig& cfg) {
    if (cfg.input_bands != h_init.bands)
        throw ShapeError("hfe_meas: params built for a different band count");
    return run_hfe(cube_to_tensor<float>(h_init), params, cfg, FeatureSource::measurement_only);
}

} // namespace sdp
