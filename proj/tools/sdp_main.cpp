// Command-line front end: dataset simulation, two-stage training,
// reconstruction, evaluation, plotting and gradient verification.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sdp/verify.hpp"
#include "sdp/pipeline.hpp"
#include "sdp/plot.hpp"

namespace {

using namespace sdp;

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

int run_simulate(const std::string& out_dir, SimulateOptions opts) {
    const auto ds = simulate_dataset(opts, out_dir);
    std::printf("wrote %zu train / %zu test scenes under %s\n", ds.train.entries.size(),
                ds.test.entries.size(), out_dir.c_str());
    return 0;
}

TrainConfig load_config_with_overrides(const std::string& config_path, int64_t seed_override,
                                       const std::string& spim_override) {
    TrainConfig cfg = load_train_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
    if (!spim_override.empty()) cfg.spim_mode = parse_spim_mode(spim_override);
    return cfg;
}

int run_train_stage1(const std::string& config_path, const std::string& out_dir,
                     int64_t seed_override, const std::string& spim_override) {
    TrainConfig cfg = load_config_with_overrides(config_path, seed_override, spim_override);
    if (cfg.stage != 1) throw ConfigError("train-stage1 needs a config with \"stage\": 1");
    const auto manifest = load_manifest(cfg.train_manifest, "train");
    const auto artifacts = train_stage1(manifest, cfg, /*verbose=*/true);
    save_stage1(artifacts, out_dir);
    std::printf("stage-1 artifacts written to %s (final loss %.6f)\n", out_dir.c_str(),
                artifacts.epoch_losses.back());
    return 0;
}

int run_train_stage2(const std::string& config_path, const std::string& stage1_dir,
                     const std::string& out_dir, int64_t seed_override,
                     const std::string& spim_override) {
    TrainConfig cfg = load_config_with_overrides(config_path, seed_override, spim_override);
    if (cfg.stage != 2) throw ConfigError("train-stage2 needs a config with \"stage\": 2");
    const auto stage1 = load_stage1(stage1_dir);
    const auto manifest = load_manifest(cfg.train_manifest, "train");
    const auto artifacts = train_stage2(stage1, manifest, cfg, /*verbose=*/true);
    save_stage2(artifacts, out_dir);
    std::printf("stage-2 artifacts written to %s (final loss %.6f)\n", out_dir.c_str(),
                artifacts.epoch_losses.back());
    return 0;
}

int run_reconstruct(const std::string& model_dir, const std::string& meas_path,
                    const std::string& mask_path, const std::string& out_path, uint64_t seed) {
    const auto model = load_stage2(model_dir);
    const Measurement y = load_measurement(meas_path);
    const CodedMask mask = load_mask(mask_path);
    const SpectralCube cube = reconstruct(y, mask, model, seed);
    save_cube(cube, out_path);
    std::printf("reconstructed %dx%dx%d cube -> %s\n", cube.height, cube.width, cube.bands,
                out_path.c_str());
    return 0;
}

int run_evaluate(const std::string& model_dir, const std::string& manifest_path, uint64_t seed,
                 const std::string& out_dir) {
    const auto model = load_stage2(model_dir);
    const auto manifest = load_manifest(manifest_path, "test");
    const EvalReport report = evaluate(model, manifest, seed);
    std::printf("%s", report.to_table().c_str());
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path d(out_dir);
        std::ofstream((d / "report.json").string()) << report.to_json() << "\n";
        std::ofstream((d / "report.txt").string()) << report.to_table();
        std::printf("report written to %s\n", out_dir.c_str());
    }
    return 0;
}

int run_plot(const std::string& cube_path, const std::string& bands_csv,
             const std::string& pixel_csv, const std::string& out_dir) {
    const SpectralCube cube = load_cube(cube_path);
    std::filesystem::create_directories(out_dir);
    if (!bands_csv.empty()) {
        const auto paths = plot_bands(cube, parse_int_list(bands_csv), out_dir);
        for (const auto& p : paths) std::printf("wrote %s\n", p.c_str());
    }
    if (!pixel_csv.empty()) {
        const auto rc = parse_int_list(pixel_csv);
        if (rc.size() != 2) throw ConfigError("--pixel expects row,col");
        const std::string path =
            (std::filesystem::path(out_dir) / "spectra.png").string();
        plot_spectra(cube, rc[0], rc[1], path);
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

// Deterministic battery over every differentiable piece; shared with the
// test suites via the library.
int run_grad_check(double epsilon) {
    bool ok = true;
    for (const auto& item : gradient_battery(epsilon)) {
        const bool pass = item.report.passed(1e-4);
        ok = ok && pass;
        std::printf("[%s] %-14s max rel err %.3e (eps %.1e)\n", pass ? "PASS" : "FAIL",
                    item.name.c_str(), item.report.max_rel_err(), item.report.epsilon);
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CASSI hyperspectral reconstruction with a spectral diffusion prior"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "synthesize scenes, masks and measurements");
    std::string sim_out = "data";
    SimulateOptions sim_opts;
    int64_t sim_seed = 0;
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--count", sim_opts.count, "number of scenes");
    sim->add_option("--height", sim_opts.height, "scene height");
    sim->add_option("--width", sim_opts.width, "scene width");
    sim->add_option("--bands", sim_opts.bands, "spectral bands");
    sim->add_option("--seed", sim_seed, "generator seed");
    sim->add_option("--train-fraction", sim_opts.train_fraction, "train split fraction");
    sim->add_option("--step-d", sim_opts.step_d, "dispersion step");

    // train-stage1 / train-stage2
    std::string cfg_path, out_dir = "model", stage1_dir, spim_override;
    int64_t seed_override = -1;
    auto* t1 = app.add_subcommand("train-stage1", "train extractor + reconstructor + injector");
    t1->add_option("--config", cfg_path, "JSON config")->required();
    t1->add_option("--out", out_dir, "artifact directory");
    t1->add_option("--seed", seed_override, "override config seed");
    t1->add_option("--spim-mode", spim_override, "both|mul|add|none");

    auto* t2 = app.add_subcommand("train-stage2", "train diffusion model, then fine-tune jointly");
    t2->add_option("--config", cfg_path, "JSON config")->required();
    t2->add_option("--stage1", stage1_dir, "stage-1 artifact directory")->required();
    t2->add_option("--out", out_dir, "artifact directory");
    t2->add_option("--seed", seed_override, "override config seed");
    t2->add_option("--spim-mode", spim_override, "both|mul|add|none");

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "reconstruct a cube from a measurement");
    std::string model_dir, meas_path, mask_path, cube_out = "reconstruction.hsc";
    uint64_t seed = 0;
    rec->add_option("--model", model_dir, "stage-2 artifact directory")->required();
    rec->add_option("--measurement", meas_path, "measurement file")->required();
    rec->add_option("--mask", mask_path, "mask file")->required();
    rec->add_option("--out", cube_out, "output cube path");
    rec->add_option("--seed", seed, "sampler seed");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "per-scene PSNR/SSIM report on a test manifest");
    std::string manifest_path, report_dir;
    ev->add_option("--model", model_dir, "stage-2 artifact directory")->required();
    ev->add_option("--manifest", manifest_path, "test manifest")->required();
    ev->add_option("--seed", seed, "sampler seed");
    ev->add_option("--out", report_dir, "directory for report.json / report.txt");

    // plot
    auto* pl = app.add_subcommand("plot", "write band images and spectral curves");
    std::string plot_cube, plot_bands_csv, plot_pixel_csv, plot_out = "plots";
    pl->add_option("--cube", plot_cube, "cube file")->required();
    pl->add_option("--bands", plot_bands_csv, "comma-separated band indices");
    pl->add_option("--pixel", plot_pixel_csv, "row,col for the spectral curve");
    pl->add_option("--out", plot_out, "output directory");

    // grad-check
    auto* gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
    double epsilon = 1e-5;
    gc->add_option("--epsilon", epsilon, "central-difference step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            sim_opts.seed = static_cast<uint64_t>(sim_seed);
            return run_simulate(sim_out, sim_opts);
        }
        if (t1->parsed()) return run_train_stage1(cfg_path, out_dir, seed_override, spim_override);
        if (t2->parsed())
            return run_train_stage2(cfg_path, stage1_dir, out_dir, seed_override, spim_override);
        if (rec->parsed()) return run_reconstruct(model_dir, meas_path, mask_path, cube_out, seed);
        if (ev->parsed()) return run_evaluate(model_dir, manifest_path, seed, report_dir);
        if (pl->parsed()) return run_plot(plot_cube, plot_bands_csv, plot_pixel_csv, plot_out);
        if (gc->parsed()) return run_grad_check(epsilon);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
