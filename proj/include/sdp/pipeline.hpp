#pragma once

#include <string>
#include <vector>

#include "sdp/cassi.hpp"
#include "sdp/cube_io.hpp"
#include "sdp/diffusion.hpp"
#include "sdp/hfe.hpp"
#include "sdp/spim.hpp"

namespace sdp {

struct ScheduleParams {
    int steps = 4;
    double beta_start = 0.1;
    double beta_end = 0.99;
};

struct ModelHyper {
    int hfe_base_channels = 16;
    int hfe_num_resblocks = 4;
    int recon_channels = 32;
    int recon_blocks = 4;
    std::vector<int> denoiser_hidden = {256, 256};
    int time_embed_dim = 16;
    int step_d = 2;
    int center_index = 0;
};

// Fields mirror the JSON config file one-to-one. learning_rate is the base
// rate: stage 1 steps at half of it, stage 2 uses it directly (defaulting to
// 1e-4 when absent from a stage-2 config).
struct TrainConfig {
    int stage = 1;
    int epochs = 50;
    double learning_rate = 2e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    int batch_size = 1;
    int block_size = 0; // 0 = no cropping
    uint64_t seed = 0;
    ScheduleParams schedule;
    SpimMode spim_mode = SpimMode::both;
    int warmup_epochs = 5;
    double diffusion_loss_weight = 1.0;
    int diffusion_draws = 4; // (t, eps) draws averaged per sample step in stage 2
    std::string train_manifest;
    std::string test_manifest;
    ModelHyper model;

    void validate() const;
};

TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& config);
uint64_t config_hash(const TrainConfig& config);

// Geometry and hyperparameters needed to rebuild a trained model.
struct ModelMeta {
    int stage = 0;
    int bands = 0;
    ModelHyper hyper;
    ScheduleParams schedule;
    SpimMode spim_mode = SpimMode::both;
    uint64_t hash = 0;

    int feature_len() const { return 4 * hyper.hfe_base_channels; }
    HfeConfig hfe_gt_config() const {
        return {hyper.hfe_base_channels, hyper.hfe_num_resblocks, 2 * bands};
    }
    HfeConfig hfe_meas_config() const {
        return {hyper.hfe_base_channels, hyper.hfe_num_resblocks, bands};
    }
    ReconConfig recon_config() const {
        return {bands, hyper.recon_channels, hyper.recon_blocks,
                SpimConfig{hyper.recon_channels, feature_len(), spim_mode}};
    }
    DenoiserConfig denoiser_config() const {
        return {feature_len(), feature_len(), hyper.time_embed_dim, hyper.denoiser_hidden};
    }
    ShiftSpec shift_spec() const { return {hyper.step_d, hyper.center_index}; }
    NoiseSchedule noise_schedule() const {
        return make_schedule(schedule.steps, schedule.beta_start, schedule.beta_end);
    }
    std::string id() const;
};

struct Stage1Artifacts {
    ModelMeta meta;
    ParamStore<float> hfe_gt;
    ParamStore<float> recon;
    ParamStore<float> spim;
    std::vector<double> epoch_losses;
};

struct Stage2Artifacts {
    ModelMeta meta;
    ParamStore<float> hfe_gt; // frozen stage-1 extractor
    ParamStore<float> hfe_meas;
    ParamStore<float> denoiser;
    ParamStore<float> recon;
    ParamStore<float> spim;
    // Per-dimension mean/std of the frozen stage-1 features over the training
    // set ("prior.mu", "prior.sigma"). The diffusion model runs in the
    // standardized space; sampled priors are mapped back before injection.
    ParamStore<float> prior_stats;
    std::vector<double> epoch_losses;
};

// Stage 1: joint training of the pair-stem extractor, reconstructor and
// injector against MSE to the ground truth, using ground-truth-conditioned
// features. Deterministic per (manifest, config).
Stage1Artifacts train_stage1(const DatasetManifest& manifest, const TrainConfig& config,
                             bool verbose = false);

// Stage 2: warmup epochs train denoiser + measurement stem on the
// noise-prediction objective against frozen stage-1 features; the remaining
// epochs also fine-tune reconstructor + injector on sampled priors (the
// sampled prior is detached from the reconstruction gradient path).
Stage2Artifacts train_stage2(const Stage1Artifacts& stage1, const DatasetManifest& manifest,
                             const TrainConfig& config, bool verbose = false);

void save_stage1(const Stage1Artifacts& artifacts, const std::string& dir);
Stage1Artifacts load_stage1(const std::string& dir);
void save_stage2(const Stage2Artifacts& artifacts, const std::string& dir);
Stage2Artifacts load_stage2(const std::string& dir);

// shift-back -> measurement feature -> sampled prior -> reconstructor;
// output clipped to [0, 1]. The mask is only used to validate geometry.
SpectralCube reconstruct(const Measurement& y, const CodedMask& mask,
                         const Stage2Artifacts& model, uint64_t seed);

struct EvalReport {
    struct SceneResult {
        std::string cube;
        double psnr = 0.0;
        double ssim = 0.0;
    };
    std::vector<SceneResult> scenes;
    double avg_psnr = 0.0;
    double avg_ssim = 0.0;
    std::string model_id;
    uint64_t hash = 0;

    std::string to_json() const;
    std::string to_table() const;
};

// Per-scene reconstruction metrics on simulated measurements of the test set.
EvalReport evaluate(const Stage2Artifacts& model, const DatasetManifest& manifest, uint64_t seed);

// Synthetic dataset generation for the CLI and the test harness.
struct SimulateOptions {
    int count = 20;
    int height = 32;
    int width = 32;
    int bands = 8;
    uint64_t seed = 0;
    double train_fraction = 0.8;
    int step_d = 2;
    bool write_measurements = true;
};

struct SimulatedDataset {
    DatasetManifest train;
    DatasetManifest test;
    std::string train_manifest_path;
    std::string test_manifest_path;
};

SimulatedDataset simulate_dataset(const SimulateOptions& options, const std::string& out_dir);

} // namespace sdp
