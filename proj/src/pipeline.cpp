#include "sdp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "nlohmann/json.hpp"
#include "sdp/metrics.hpp"
#include "sdp/optim.hpp"
#include "sdp/scene.hpp"

namespace sdp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (stage != 1 && stage != 2) throw ConfigError("config: stage must be 1 or 2");
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be > 0");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
        throw ConfigError("config: adam betas must lie in [0, 1)");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (block_size < 0) throw ConfigError("config: block_size must be >= 0");
    if (warmup_epochs < 0 || warmup_epochs > epochs)
        throw ConfigError("config: need 0 <= warmup_epochs <= epochs");
    if (diffusion_loss_weight < 0.0) throw ConfigError("config: negative loss weight");
    if (diffusion_draws < 1) throw ConfigError("config: diffusion_draws must be >= 1");
    make_schedule(schedule.steps, schedule.beta_start, schedule.beta_end); // range check
    if (model.hfe_base_channels < 1 || model.hfe_num_resblocks < 1 ||
        model.recon_channels < 1 || model.recon_blocks < 1 || model.step_d < 0 ||
        model.center_index < 0)
        throw ConfigError("config: bad model dims");
}

namespace {

ModelHyper hyper_from_json(const json& j) {
    ModelHyper h;
    h.hfe_base_channels = j.value("hfe_base_channels", h.hfe_base_channels);
    h.hfe_num_resblocks = j.value("hfe_num_resblocks", h.hfe_num_resblocks);
    h.recon_channels = j.value("recon_channels", h.recon_channels);
    h.recon_blocks = j.value("recon_blocks", h.recon_blocks);
    if (j.contains("denoiser_hidden"))
        h.denoiser_hidden = j.at("denoiser_hidden").get<std::vector<int>>();
    h.time_embed_dim = j.value("time_embed_dim", h.time_embed_dim);
    h.step_d = j.value("step_d", h.step_d);
    h.center_index = j.value("center_index", h.center_index);
    return h;
}

json hyper_to_json(const ModelHyper& h) {
    return json{{"hfe_base_channels", h.hfe_base_channels},
                {"hfe_num_resblocks", h.hfe_num_resblocks},
                {"recon_channels", h.recon_channels},
                {"recon_blocks", h.recon_blocks},
                {"denoiser_hidden", h.denoiser_hidden},
                {"time_embed_dim", h.time_embed_dim},
                {"step_d", h.step_d},
                {"center_index", h.center_index}};
}

json schedule_to_json(const ScheduleParams& s) {
    return json{{"steps", s.steps}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}};
}

ScheduleParams schedule_from_json(const json& j) {
    ScheduleParams s;
    s.steps = j.value("steps", s.steps);
    s.beta_start = j.value("beta_start", s.beta_start);
    s.beta_end = j.value("beta_end", s.beta_end);
    return s;
}

} // namespace

TrainConfig parse_train_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    TrainConfig c;
    c.stage = j.value("stage", 1);
    if (c.stage == 2) c.learning_rate = 1e-4; // stage-2 default rate
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.block_size = j.value("block_size", c.block_size);
    c.seed = j.value("seed", c.seed);
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
    c.spim_mode = parse_spim_mode(j.value("spim_mode", "both"));
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.diffusion_loss_weight = j.value("diffusion_loss_weight", c.diffusion_loss_weight);
    c.diffusion_draws = j.value("diffusion_draws", c.diffusion_draws);
    c.train_manifest = j.value("train_manifest", "");
    c.test_manifest = j.value("test_manifest", "");
    if (j.contains("model")) c.model = hyper_from_json(j.at("model"));
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    TrainConfig c = parse_train_config(text);
    // manifest paths resolve against the config file location
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && !std::filesystem::path(p).is_absolute()) p = (base / p).string();
    };
    resolve(c.train_manifest);
    resolve(c.test_manifest);
    return c;
}

std::string train_config_to_json(const TrainConfig& c) {
    json j{{"stage", c.stage},
           {"epochs", c.epochs},
           {"learning_rate", c.learning_rate},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"batch_size", c.batch_size},
           {"block_size", c.block_size},
           {"seed", c.seed},
           {"schedule", schedule_to_json(c.schedule)},
           {"spim_mode", to_string(c.spim_mode)},
           {"warmup_epochs", c.warmup_epochs},
           {"diffusion_loss_weight", c.diffusion_loss_weight},
           {"diffusion_draws", c.diffusion_draws},
           {"train_manifest", c.train_manifest},
           {"test_manifest", c.test_manifest},
           {"model", hyper_to_json(c.model)}};
    return j.dump(2);
}

uint64_t config_hash(const TrainConfig& c) {
    const std::string text = train_config_to_json(c);
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string ModelMeta::id() const {
    return "stage" + std::to_string(stage) + "-" + to_string(spim_mode) + "-L" +
           std::to_string(bands);
}

// ---------------------------------------------------------------------------
// Training helpers
// ---------------------------------------------------------------------------

namespace {

struct LoadedData {
    std::vector<SpectralCube> cubes;
    std::vector<CodedMask> masks;
    int bands = 0;
};

LoadedData load_dataset(const DatasetManifest& manifest) {
    if (manifest.entries.empty()) throw ConfigError("empty manifest");
    LoadedData data;
    for (const auto& e : manifest.entries) {
        data.cubes.push_back(load_cube(e.cube));
        data.masks.push_back(load_mask(e.mask));
        if (!same_spatial(data.cubes.back(), data.masks.back()))
            throw ShapeError(e.mask + ": mask dims differ from cube");
    }
    data.bands = data.cubes.front().bands;
    for (const auto& c : data.cubes)
        if (c.bands != data.bands) throw FormatError("band mismatch across manifest");
    return data;
}

std::pair<SpectralCube, CodedMask> prepare_sample(const SpectralCube& cube, const CodedMask& mask,
                                                  const TrainConfig& cfg, uint64_t stage_tag,
                                                  int epoch, size_t idx) {
    SpectralCube c = cube;
    CodedMask m = mask;
    if (cfg.block_size > 0) {
        auto cm = crop_block(c, m, cfg.block_size,
                             mix_seed({cfg.seed, stage_tag, static_cast<uint64_t>(epoch),
                                       static_cast<uint64_t>(idx), hash_str("crop")}));
        c = std::move(cm.first);
        m = std::move(cm.second);
    }
    auto am = augment(c, m,
                      mix_seed({cfg.seed, stage_tag, static_cast<uint64_t>(epoch),
                                static_cast<uint64_t>(idx), hash_str("aug")}));
    return am;
}

void zero_params(ParamStore<float>& store) {
    for (auto& [_, t] : store) t.fill(0.0f);
}

// Feature-space standardization for the diffusion model. Computed once per
// stage-2 run from the frozen extractor on the un-augmented training scenes.
ParamStore<float> compute_prior_stats(const LoadedData& data, const ParamStore<float>& hfe_params,
                                      const HfeConfig& gt_cfg, const ShiftSpec& spec,
                                      int feat_len) {
    std::vector<double> mean(static_cast<size_t>(feat_len), 0.0);
    std::vector<double> sq(static_cast<size_t>(feat_len), 0.0);
    for (size_t i = 0; i < data.cubes.size(); ++i) {
        const Measurement y = forward_model(data.cubes[i], data.masks[i], spec);
        const SpectralCube h = shift_back(y, spec, data.bands);
        const auto f = hfe_gt(h, data.cubes[i], hfe_params, gt_cfg);
        for (int k = 0; k < feat_len; ++k) {
            mean[static_cast<size_t>(k)] += f.values[static_cast<size_t>(k)];
            sq[static_cast<size_t>(k)] +=
                static_cast<double>(f.values[static_cast<size_t>(k)]) * f.values[static_cast<size_t>(k)];
        }
    }
    const double n = static_cast<double>(data.cubes.size());
    ParamStore<float> stats;
    Tensor<float> mu(Shape{feat_len}), sigma(Shape{feat_len});
    for (int k = 0; k < feat_len; ++k) {
        const double m = mean[static_cast<size_t>(k)] / n;
        const double var = std::max(0.0, sq[static_cast<size_t>(k)] / n - m * m);
        mu[k] = static_cast<float>(m);
        sigma[k] = static_cast<float>(std::max(std::sqrt(var), 1e-3));
    }
    stats.add("prior.mu", std::move(mu));
    stats.add("prior.sigma", std::move(sigma));
    return stats;
}

std::vector<float> standardize(const std::vector<float>& x, const ParamStore<float>& stats) {
    const auto& mu = stats.at("prior.mu");
    const auto& sigma = stats.at("prior.sigma");
    std::vector<float> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu[static_cast<int64_t>(i)]) / sigma[static_cast<int64_t>(i)];
    return out;
}

std::vector<float> unstandardize(const std::vector<float>& x, const ParamStore<float>& stats) {
    const auto& mu = stats.at("prior.mu");
    const auto& sigma = stats.at("prior.sigma");
    std::vector<float> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = mu[static_cast<int64_t>(i)] + sigma[static_cast<int64_t>(i)] * x[i];
    return out;
}

void scale_params(ParamStore<float>& store, float k) {
    for (auto& [_, t] : store)
        for (auto& v : t.data) v *= k;
}

} // namespace

Stage1Artifacts train_stage1(const DatasetManifest& manifest, const TrainConfig& config,
                             bool verbose) {
    config.validate();
    LoadedData data = load_dataset(manifest);

    ModelMeta meta;
    meta.stage = 1;
    meta.bands = data.bands;
    meta.hyper = config.model;
    meta.schedule = config.schedule;
    meta.spim_mode = config.spim_mode;
    meta.hash = config_hash(config);

    const HfeConfig hfe_cfg = meta.hfe_gt_config();
    const ReconConfig recon_cfg = meta.recon_config();

    Stage1Artifacts art;
    art.meta = meta;
    art.hfe_gt = init_params<float>(mix_seed({config.seed, hash_str("init.hfe_gt")}),
                                    hfe_param_specs(hfe_cfg));
    art.recon = init_params<float>(mix_seed({config.seed, hash_str("init.recon")}),
                                   recon_param_specs(recon_cfg));
    art.spim = init_params<float>(mix_seed({config.seed, hash_str("init.spim")}),
                                  spim_param_specs(recon_cfg.spim));

    // the plug-in protocol halves the base learning rate in stage 1
    const double lr = 0.5 * config.learning_rate;
    Adam<float> opt_hfe(lr, config.adam_beta1, config.adam_beta2);
    Adam<float> opt_recon(lr, config.adam_beta1, config.adam_beta2);
    Adam<float> opt_spim(lr, config.adam_beta1, config.adam_beta2);

    ParamStore<float> g_hfe = art.hfe_gt.zeros_like();
    ParamStore<float> g_recon = art.recon.zeros_like();
    ParamStore<float> g_spim = art.spim.zeros_like();
    int batch_n = 0;

    auto flush = [&]() {
        if (batch_n == 0) return;
        const float inv = 1.0f / static_cast<float>(batch_n);
        scale_params(g_hfe, inv);
        scale_params(g_recon, inv);
        scale_params(g_spim, inv);
        opt_hfe.step(art.hfe_gt, g_hfe);
        opt_recon.step(art.recon, g_recon);
        opt_spim.step(art.spim, g_spim);
        zero_params(g_hfe);
        zero_params(g_recon);
        zero_params(g_spim);
        batch_n = 0;
    };

    const ShiftSpec spec = meta.shift_spec();
    const uint64_t stage_tag = hash_str("stage1");

    for (int e = 0; e < config.epochs; ++e) {
        double loss_sum = 0.0;
        for (size_t idx = 0; idx < data.cubes.size(); ++idx) {
            auto [cube, mask] = prepare_sample(data.cubes[idx], data.masks[idx], config,
                                               stage_tag, e, idx);
            const Measurement y = forward_model(cube, mask, spec);
            const SpectralCube h = shift_back(y, spec, data.bands);

            Tape<float> tape;
            ParamRefs<float> hfe_refs(tape, art.hfe_gt, true);
            ParamRefs<float> recon_refs(tape, art.recon, true);
            ParamRefs<float> spim_refs(tape, art.spim, true);
            auto h_leaf = tape.leaf(cube_to_tensor<float>(h));
            auto g_leaf = tape.leaf(cube_to_tensor<float>(cube));
            auto pair_leaf = tape.leaf(concat_cubes<float>(h, cube));
            auto feat = hfe_forward(tape, hfe_refs, pair_leaf, hfe_cfg);
            auto out = recon_forward(tape, recon_refs, spim_refs, h_leaf, feat, recon_cfg);
            auto loss = tape.mse(out, g_leaf);
            tape.backward(loss);
            hfe_refs.grads(g_hfe);
            recon_refs.grads(g_recon);
            spim_refs.grads(g_spim);
            loss_sum += tape.val(loss)[0];
            if (++batch_n == config.batch_size) flush();
        }
        flush();
        art.epoch_losses.push_back(loss_sum / static_cast<double>(data.cubes.size()));
        if (verbose)
            std::printf("[stage1] epoch %3d/%d  loss %.6f\n", e + 1, config.epochs,
                        art.epoch_losses.back());
    }
    return art;
}

Stage2Artifacts train_stage2(const Stage1Artifacts& stage1, const DatasetManifest& manifest,
                             const TrainConfig& config, bool verbose) {
    config.validate();
    LoadedData data = load_dataset(manifest);
    if (data.bands != stage1.meta.bands)
        throw ConfigError("train_stage2: manifest band count differs from stage-1 model");

    ModelMeta meta = stage1.meta;
    meta.stage = 2;
    meta.schedule = config.schedule;
    meta.spim_mode = config.spim_mode;
    meta.hash = config_hash(config);

    const HfeConfig gt_cfg = meta.hfe_gt_config();
    const HfeConfig meas_cfg = meta.hfe_meas_config();
    const ReconConfig recon_cfg = meta.recon_config();
    const DenoiserConfig den_cfg = meta.denoiser_config();
    const NoiseSchedule sched = meta.noise_schedule();
    const int feat_len = meta.feature_len();

    Stage2Artifacts art;
    art.meta = meta;
    art.hfe_gt = stage1.hfe_gt; // frozen: stationary diffusion targets
    art.recon = stage1.recon;
    art.spim = stage1.spim;
    art.hfe_meas = init_params<float>(mix_seed({config.seed, hash_str("init.hfe_meas")}),
                                      hfe_param_specs(meas_cfg));
    // the trunk topology matches the pair-stem extractor; starting from the
    // stage-1 trunk gives the conditioning feature a meaningful space from the
    // first warmup step (only the stem differs in shape)
    for (auto& [name, tensor] : art.hfe_meas)
        if (name.rfind("hfe.stem.", 0) != 0) tensor = art.hfe_gt.at(name);
    art.denoiser = init_params<float>(mix_seed({config.seed, hash_str("init.denoiser")}),
                                      denoiser_param_specs(den_cfg));
    art.prior_stats =
        compute_prior_stats(data, art.hfe_gt, gt_cfg, meta.shift_spec(), feat_len);

    Adam<float> opt_meas(config.learning_rate, config.adam_beta1, config.adam_beta2);
    Adam<float> opt_den(config.learning_rate, config.adam_beta1, config.adam_beta2);
    Adam<float> opt_recon(config.learning_rate, config.adam_beta1, config.adam_beta2);
    Adam<float> opt_spim(config.learning_rate, config.adam_beta1, config.adam_beta2);

    ParamStore<float> g_meas = art.hfe_meas.zeros_like();
    ParamStore<float> g_den = art.denoiser.zeros_like();
    ParamStore<float> g_recon = art.recon.zeros_like();
    ParamStore<float> g_spim = art.spim.zeros_like();
    int batch_n = 0;
    bool joint = false;

    auto flush = [&]() {
        if (batch_n == 0) return;
        const float inv = 1.0f / static_cast<float>(batch_n);
        scale_params(g_meas, inv);
        scale_params(g_den, inv);
        opt_meas.step(art.hfe_meas, g_meas);
        opt_den.step(art.denoiser, g_den);
        zero_params(g_meas);
        zero_params(g_den);
        if (joint) {
            scale_params(g_recon, inv);
            scale_params(g_spim, inv);
            opt_recon.step(art.recon, g_recon);
            opt_spim.step(art.spim, g_spim);
            zero_params(g_recon);
            zero_params(g_spim);
        }
        batch_n = 0;
    };

    const ShiftSpec spec = meta.shift_spec();
    const uint64_t stage_tag = hash_str("stage2");

    for (int e = 0; e < config.epochs; ++e) {
        joint = e >= config.warmup_epochs;
        double loss_sum = 0.0;
        for (size_t idx = 0; idx < data.cubes.size(); ++idx) {
            auto [cube, mask] = prepare_sample(data.cubes[idx], data.masks[idx], config,
                                               stage_tag, e, idx);
            const Measurement y = forward_model(cube, mask, spec);
            const SpectralCube h = shift_back(y, spec, data.bands);

            // stationary target from the frozen pair-stem extractor, mapped
            // into the standardized diffusion space
            const std::vector<float> x0 =
                standardize(hfe_gt(h, cube, art.hfe_gt, gt_cfg).values, art.prior_stats);

            Rng noise_rng(mix_seed({config.seed, stage_tag, static_cast<uint64_t>(e),
                                    static_cast<uint64_t>(idx), hash_str("noise")}));

            // noise-prediction objective, averaged over several (t, eps) draws
            // sharing one extractor pass; conditioning stays on the tape so the
            // measurement stem learns through it
            Tape<float> tape;
            ParamRefs<float> meas_refs(tape, art.hfe_meas, true);
            ParamRefs<float> den_refs(tape, art.denoiser, true);
            auto h_leaf = tape.leaf(cube_to_tensor<float>(h));
            auto hfm = hfe_forward(tape, meas_refs, h_leaf, meas_cfg);
            Tape<float>::Ref dloss = Tape<float>::none;
            for (int draw = 0; draw < config.diffusion_draws; ++draw) {
                const int t = noise_rng.uniform_int(1, sched.steps);
                std::vector<float> eps(static_cast<size_t>(feat_len));
                for (auto& v : eps) v = static_cast<float>(noise_rng.normal());
                auto x_t_leaf =
                    tape.leaf(Tensor<float>(Shape{feat_len}, q_sample(x0, t, eps, sched)));
                auto eps_leaf = tape.leaf(Tensor<float>(Shape{feat_len}, eps));
                auto pred = denoiser_forward(tape, den_refs, x_t_leaf, t, hfm, den_cfg);
                auto term = tape.mse(pred, eps_leaf);
                dloss = dloss == Tape<float>::none ? term : tape.add(dloss, term);
            }
            if (config.diffusion_draws > 1)
                dloss = tape.scale(dloss, 1.0f / static_cast<float>(config.diffusion_draws));
            tape.backward(dloss);
            meas_refs.grads(g_meas);
            den_refs.grads(g_den);
            double step_loss =
                config.diffusion_loss_weight * static_cast<double>(tape.val(dloss)[0]);

            if (joint) {
                // sampled prior, detached from the reconstruction gradient path
                HsiFeature hf_m{tape.val(hfm).data, FeatureSource::measurement_only};
                const auto prior =
                    sample_sdp(hf_m, art.denoiser, den_cfg, sched,
                               mix_seed({config.seed, stage_tag, static_cast<uint64_t>(e),
                                         static_cast<uint64_t>(idx), hash_str("sdp")}));
                const std::vector<float> injected = unstandardize(prior.values, art.prior_stats);

                Tape<float> rtape;
                ParamRefs<float> recon_refs(rtape, art.recon, true);
                ParamRefs<float> spim_refs(rtape, art.spim, true);
                auto h_leaf_r = rtape.leaf(cube_to_tensor<float>(h));
                auto g_leaf_r = rtape.leaf(cube_to_tensor<float>(cube));
                auto sdp_leaf = rtape.leaf(Tensor<float>(Shape{feat_len}, injected));
                auto out = recon_forward(rtape, recon_refs, spim_refs, h_leaf_r, sdp_leaf,
                                         recon_cfg);
                auto rloss = rtape.mse(out, g_leaf_r);
                rtape.backward(rloss);
                recon_refs.grads(g_recon);
                spim_refs.grads(g_spim);
                step_loss += static_cast<double>(rtape.val(rloss)[0]);
            }

            loss_sum += step_loss;
            if (++batch_n == config.batch_size) flush();
        }
        flush();
        art.epoch_losses.push_back(loss_sum / static_cast<double>(data.cubes.size()));
        if (verbose)
            std::printf("[stage2] epoch %3d/%d  %s loss %.6f\n", e + 1, config.epochs,
                        joint ? "joint " : "warmup", art.epoch_losses.back());
    }
    return art;
}

// ---------------------------------------------------------------------------
// Artifact persistence
// ---------------------------------------------------------------------------

namespace {

json meta_to_json(const ModelMeta& m) {
    char hash_hex[19];
    std::snprintf(hash_hex, sizeof hash_hex, "0x%016llx",
                  static_cast<unsigned long long>(m.hash));
    return json{{"stage", m.stage},
                {"bands", m.bands},
                {"hyper", hyper_to_json(m.hyper)},
                {"schedule", schedule_to_json(m.schedule)},
                {"spim_mode", to_string(m.spim_mode)},
                {"config_hash", hash_hex}};
}

ModelMeta meta_from_json(const json& j) {
    ModelMeta m;
    m.stage = j.at("stage").get<int>();
    m.bands = j.at("bands").get<int>();
    m.hyper = hyper_from_json(j.at("hyper"));
    m.schedule = schedule_from_json(j.at("schedule"));
    m.spim_mode = parse_spim_mode(j.at("spim_mode").get<std::string>());
    m.hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    return m;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path);
}

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return j;
}

void save_losses(const std::vector<double>& losses, const std::string& path) {
    write_text(path, json{{"epoch_losses", losses}}.dump(2) + "\n");
}

std::vector<double> load_losses(const std::string& path) {
    if (!std::filesystem::exists(path)) return {};
    return read_json(path).at("epoch_losses").get<std::vector<double>>();
}

} // namespace

void save_stage1(const Stage1Artifacts& a, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path d(dir);
    write_text((d / "model.json").string(), meta_to_json(a.meta).dump(2) + "\n");
    save_params(a.hfe_gt, (d / "hfe_gt.params").string());
    save_params(a.recon, (d / "recon.params").string());
    save_params(a.spim, (d / "spim.params").string());
    save_losses(a.epoch_losses, (d / "loss_log.json").string());
}

Stage1Artifacts load_stage1(const std::string& dir) {
    const std::filesystem::path d(dir);
    Stage1Artifacts a;
    a.meta = meta_from_json(read_json((d / "model.json").string()));
    if (a.meta.stage != 1) throw FormatError(dir + ": not a stage-1 model");
    a.hfe_gt = load_params<float>((d / "hfe_gt.params").string());
    a.recon = load_params<float>((d / "recon.params").string());
    a.spim = load_params<float>((d / "spim.params").string());
    a.epoch_losses = load_losses((d / "loss_log.json").string());
    return a;
}

void save_stage2(const Stage2Artifacts& a, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path d(dir);
    write_text((d / "model.json").string(), meta_to_json(a.meta).dump(2) + "\n");
    save_params(a.hfe_gt, (d / "hfe_gt.params").string());
    save_params(a.hfe_meas, (d / "hfe_meas.params").string());
    save_params(a.denoiser, (d / "denoiser.params").string());
    save_params(a.recon, (d / "recon.params").string());
    save_params(a.spim, (d / "spim.params").string());
    save_params(a.prior_stats, (d / "prior_stats.params").string());
    save_losses(a.epoch_losses, (d / "loss_log.json").string());
}

Stage2Artifacts load_stage2(const std::string& dir) {
    const std::filesystem::path d(dir);
    Stage2Artifacts a;
    a.meta = meta_from_json(read_json((d / "model.json").string()));
    if (a.meta.stage != 2) throw FormatError(dir + ": not a stage-2 model");
    a.hfe_gt = load_params<float>((d / "hfe_gt.params").string());
    a.hfe_meas = load_params<float>((d / "hfe_meas.params").string());
    a.denoiser = load_params<float>((d / "denoiser.params").string());
    a.recon = load_params<float>((d / "recon.params").string());
    a.spim = load_params<float>((d / "spim.params").string());
    a.prior_stats = load_params<float>((d / "prior_stats.params").string());
    a.epoch_losses = load_losses((d / "loss_log.json").string());
    return a;
}

// ---------------------------------------------------------------------------
// Inference and evaluation
// ---------------------------------------------------------------------------

SpectralCube reconstruct(const Measurement& y, const CodedMask& mask,
                         const Stage2Artifacts& model, uint64_t seed) {
    const ShiftSpec spec = model.meta.shift_spec();
    SpectralCube h = shift_back(y, spec, model.meta.bands);
    if (mask.height != h.height || mask.width != h.width)
        throw ShapeError("reconstruct: mask geometry inconsistent with measurement");
    const HsiFeature hf_m = hfe_meas(h, model.hfe_meas, model.meta.hfe_meas_config());
    const auto prior =
        sample_sdp(hf_m, model.denoiser, model.meta.denoiser_config(),
                   model.meta.noise_schedule(), seed);
    const std::vector<float> injected = unstandardize(prior.values, model.prior_stats);
    SpectralCube out = recon_forward(h, injected, model.recon, model.spim,
                                     model.meta.recon_config());
    for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

namespace {

json metric_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::string metric_to_text(double v, int width, int precision) {
    char buf[64];
    if (std::isinf(v))
        std::snprintf(buf, sizeof buf, "%*s", width, v > 0 ? "inf" : "-inf");
    else
        std::snprintf(buf, sizeof buf, "%*.*f", width, precision, v);
    return buf;
}

} // namespace

EvalReport evaluate(const Stage2Artifacts& model, const DatasetManifest& manifest,
                    uint64_t seed) {
    if (manifest.entries.empty()) throw ConfigError("evaluate: empty manifest");
    EvalReport report;
    report.model_id = model.meta.id();
    report.hash = model.meta.hash;
    const ShiftSpec spec = model.meta.shift_spec();

    double psum = 0.0, ssum = 0.0;
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& entry = manifest.entries[i];
        const SpectralCube cube = load_cube(entry.cube);
        const CodedMask mask = load_mask(entry.mask);
        const Measurement y = forward_model(cube, mask, spec);
        const SpectralCube rec =
            reconstruct(y, mask, model, mix_seed({seed, hash_str("eval"), i}));
        EvalReport::SceneResult r;
        r.cube = std::filesystem::path(entry.cube).filename().string();
        r.psnr = psnr(rec, cube);
        r.ssim = ssim(rec, cube);
        psum += r.psnr;
        ssum += r.ssim;
        report.scenes.push_back(std::move(r));
    }
    report.avg_psnr = psum / static_cast<double>(report.scenes.size());
    report.avg_ssim = ssum / static_cast<double>(report.scenes.size());
    return report;
}

std::string EvalReport::to_json() const {
    json scenes_j = json::array();
    for (const auto& s : scenes)
        scenes_j.push_back(
            {{"cube", s.cube}, {"psnr", metric_to_json(s.psnr)}, {"ssim", metric_to_json(s.ssim)}});
    char hash_hex[19];
    std::snprintf(hash_hex, sizeof hash_hex, "0x%016llx", static_cast<unsigned long long>(hash));
    json j{{"model", model_id},
           {"config_hash", hash_hex},
           {"scenes", scenes_j},
           {"avg_psnr", metric_to_json(avg_psnr)},
           {"avg_ssim", metric_to_json(avg_ssim)}};
    return j.dump(2);
}

std::string EvalReport::to_table() const {
    std::string out;
    out += "Scene                          PSNR (dB)      SSIM\n";
    out += "---------------------------------------------------\n";
    char line[128];
    for (const auto& s : scenes) {
        std::snprintf(line, sizeof line, "%-28s", s.cube.c_str());
        out += line;
        out += metric_to_text(s.psnr, 11, 3);
        out += metric_to_text(s.ssim, 10, 4);
        out += "\n";
    }
    out += "---------------------------------------------------\n";
    std::snprintf(line, sizeof line, "%-28s", "Average");
    out += line;
    out += metric_to_text(avg_psnr, 11, 3);
    out += metric_to_text(avg_ssim, 10, 4);
    out += "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Dataset synthesis
// ---------------------------------------------------------------------------

SimulatedDataset simulate_dataset(const SimulateOptions& o, const std::string& out_dir) {
    if (o.count < 1) throw ConfigError("simulate: count must be >= 1");
    if (o.train_fraction < 0.0 || o.train_fraction > 1.0)
        throw ConfigError("simulate: train_fraction must lie in [0, 1]");
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path d(out_dir);
    const ShiftSpec spec{o.step_d, 0};

    DatasetManifest train_rel, test_rel;
    train_rel.split = "train";
    test_rel.split = "test";
    const int train_count = static_cast<int>(std::lround(o.train_fraction * o.count));

    for (int i = 0; i < o.count; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "scene_%03d.hsc", i);
        const std::string cube_name = name;
        std::snprintf(name, sizeof name, "mask_%03d.msk", i);
        const std::string mask_name = name;

        const uint64_t scene_seed = mix_seed({o.seed, hash_str("sim.scene"), static_cast<uint64_t>(i)});
        const SpectralCube cube = synthesize_scene(scene_seed, o.height, o.width, o.bands);
        const CodedMask mask =
            random_mask(mix_seed({o.seed, hash_str("sim.mask"), static_cast<uint64_t>(i)}),
                        o.height, o.width);
        save_cube(cube, (d / cube_name).string());
        save_mask(mask, (d / mask_name).string());
        if (o.write_measurements) {
            std::snprintf(name, sizeof name, "meas_%03d.hsc", i);
            save_measurement(forward_model(cube, mask, spec), (d / name).string());
        }

        ManifestEntry e{cube_name, mask_name, scene_seed};
        (i < train_count ? train_rel : test_rel).entries.push_back(std::move(e));
    }

    SimulatedDataset out;
    out.train_manifest_path = (d / "train.json").string();
    out.test_manifest_path = (d / "test.json").string();
    save_manifest(train_rel, out.train_manifest_path);
    save_manifest(test_rel, out.test_manifest_path);
    out.train = load_manifest(out.train_manifest_path, "train");
    out.test = load_manifest(out.test_manifest_path, "test");
    return out;
}

} // namespace sdp
