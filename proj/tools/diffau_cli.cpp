// Command-line front end: dataset synthesis, per-block training, cascade
// upscaling, the compressed-sensing baseline, evaluation and energy plots.
// Exit codes: 0 success, 2 usage/validation error, 3 runtime failure.

#include <CLI11.hpp>

#include <torch/torch.h>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "diffau/cascade.hpp"
#include "diffau/config.hpp"
#include "diffau/cs_baseline.hpp"
#include "diffau/dataset.hpp"
#include "diffau/energy_plot.hpp"
#include "diffau/metrics.hpp"
#include "diffau/training.hpp"

namespace fs = std::filesystem;
using namespace diffau;

namespace {

AmbisonicsSignal load_ambisonics_wav(const fs::path& path, int expected_channels) {
    WavData wav = read_wav(path);
    if (expected_channels > 0 && wav.samples.rows() != expected_channels)
        throw std::invalid_argument("expected " + std::to_string(expected_channels) + " channels in " +
                                    path.string() + ", found " + std::to_string(wav.samples.rows()));
    const int order = order_from_channels(wav.samples.rows());
    return AmbisonicsSignal(order, std::move(wav.samples), wav.sample_rate);
}

PCSamplerConfig sampler_config(const RunConfig& cfg) {
    PCSamplerConfig sc;
    sc.predictor_steps = cfg.sampler.predictor_steps;
    sc.corrector_steps_per_predictor = cfg.sampler.corrector_steps_per_predictor;
    sc.snr = cfg.sampler.snr;
    sc.final_denoise = cfg.sampler.final_denoise;
    return sc;
}

int cmd_synth_data(const RunConfig& cfg, const fs::path& corpus_dir, const fs::path& out_dir) {
    Corpus corpus = ingest_corpus(corpus_dir);
    for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
    SynthResult result = synth_dataset(corpus, cfg.dataset.n_clips, cfg.seed, cfg.dataset.split, out_dir);
    echo_config(cfg, out_dir);
    std::map<std::string, int> split_counts;
    for (const auto& e : result.manifest.entries) ++split_counts[e.split];
    std::cout << "wrote " << result.clips_written << " clips to " << (out_dir / "clips").string() << "\n";
    for (const auto& [split, n] : split_counts) std::cout << "  " << split << ": " << n << " clips\n";
    std::cout << "manifest: " << result.manifest_path.string() << "\n";
    return 0;
}

std::vector<AmbisonicsSignal> load_split_clips(const fs::path& dataset_dir, const DatasetManifest& manifest,
                                               const std::string& split) {
    std::vector<AmbisonicsSignal> clips;
    for (const auto& entry : manifest.entries) {
        if (!split.empty() && entry.split != split) continue;
        clips.push_back(load_ambisonics_wav(dataset_dir / "clips" / (entry.clip_id + ".wav"), 16));
    }
    return clips;
}

int cmd_train(const RunConfig& cfg, const fs::path& dataset_dir, int block, const fs::path& out_ckpt,
              const std::optional<fs::path>& resume) {
    if (block != 1 && block != 2) throw std::invalid_argument("--block must be 1 or 2");
    DatasetManifest manifest = load_manifest(dataset_dir / "manifest.jsonl");
    std::vector<AmbisonicsSignal> clips = load_split_clips(dataset_dir, manifest, "train");
    if (clips.empty()) clips = load_split_clips(dataset_dir, manifest, "");  // tiny sets may lack split tags
    if (clips.empty()) throw std::invalid_argument("no training clips found in " + dataset_dir.string());

    const ScoreModelConfig& model_cfg = block == 1 ? cfg.model1 : cfg.model2;
    const TrainSection& ts = block == 1 ? cfg.train1 : cfg.train2;
    TrainConfig tc;
    tc.block_order = block;
    tc.batch_size = ts.batch_size;
    tc.step_size = ts.step_size;
    tc.total_steps = ts.total_steps;
    tc.val_cadence = ts.val_cadence;
    tc.crop = ts.crop;
    tc.seed = cfg.seed;

    std::optional<ScoreModelParams> init;
    if (resume) {
        init = load_checkpoint(*resume);
        if (init->config.block_order != block)
            throw config_error("resume checkpoint is for block " + std::to_string(init->config.block_order));
    }

    std::vector<TrainingPair> pairs = make_pairs(clips, block, cfg.stft, cfg.amplitude);
    std::cout << "training block " << block << " on " << pairs.size() << " pairs, " << tc.total_steps
              << " steps\n";
    const fs::path log_path = out_ckpt.string() + ".losslog.txt";
    std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
    TrainResult result =
        train_block(pairs, model_cfg, tc, cfg.schedule, cfg.stft, cfg.amplitude, init ? &*init : nullptr,
                    [&](const LossPoint& p) {
                        std::cout << "  step " << p.step << " train " << p.train_loss << " val " << p.val_loss
                                  << std::endl;
                        log << p.step << "\t" << p.train_loss << "\t" << p.val_loss << "\n";
                    });
    save_checkpoint(result.params, out_ckpt);
    echo_config(cfg, out_ckpt.parent_path().empty() ? "." : out_ckpt.parent_path());
    std::cout << "checkpoint: " << out_ckpt.string() << " (" << result.params.parameter_count() << " parameters)\n";
    std::cout << "loss log: " << log_path.string() << "\n";
    return 0;
}

int cmd_upscale(const RunConfig& cfg, const fs::path& input, const fs::path& ckpt1, const fs::path& ckpt2,
                const fs::path& output) {
    AmbisonicsSignal foa = load_ambisonics_wav(input, 4);
    ScoreModelParams block1 = load_checkpoint(ckpt1);
    ScoreModelParams block2 = load_checkpoint(ckpt2);
    if (block1.config.block_order != 1) throw config_error(ckpt1.string() + " is not a block-1 checkpoint");
    if (block2.config.block_order != 2) throw config_error(ckpt2.string() + " is not a block-2 checkpoint");
    at::Generator gen = make_generator(cfg.seed);
    AmbisonicsSignal hoa = diffau_upscale(foa, block1, block2, sampler_config(cfg), gen);
    write_wav_float32(output, hoa.channels, hoa.sample_rate);
    if (!output.parent_path().empty()) echo_config(cfg, output.parent_path());
    std::cout << "wrote " << output.string() << " (16 channels, " << hoa.num_samples() << " samples)\n";
    return 0;
}

int cmd_baseline(const RunConfig& cfg, const fs::path& input, const fs::path& output) {
    AmbisonicsSignal foa = load_ambisonics_wav(input, 4);
    DirectionGrid grid = make_fibonacci_grid(cfg.baseline.grid_size);
    CSUpscaleStats stats;
    AmbisonicsSignal hoa = cs_upscale(foa, grid, cfg.baseline.solver, cfg.stft, cfg.jobs, &stats);
    write_wav_float32(output, hoa.channels, hoa.sample_rate);
    if (!output.parent_path().empty()) echo_config(cfg, output.parent_path());
    std::cout << "wrote " << output.string() << " (solved " << stats.solved_bins << " bins, skipped "
              << stats.skipped_bins << ", unconverged " << stats.unconverged_bins << ")\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const fs::path& estimates_dir, const fs::path& references_dir,
             const fs::path& out_dir) {
    DatasetManifest manifest = load_manifest(references_dir / "manifest.jsonl");
    std::map<std::string, double> scores;
    std::vector<std::string> missing;
    for (const auto& entry : manifest.entries) {
        if (entry.split != "test") continue;
        const fs::path est_path = estimates_dir / (entry.clip_id + ".wav");
        const fs::path ref_path = references_dir / "clips" / (entry.clip_id + ".wav");
        if (!fs::exists(est_path)) {
            missing.push_back(entry.clip_id);
            continue;
        }
        AmbisonicsSignal est = load_ambisonics_wav(est_path, 16);
        AmbisonicsSignal ref = load_ambisonics_wav(ref_path, 16);
        scores[entry.clip_id] = stft_sdr(est, ref, cfg.stft);
    }
    if (!missing.empty()) {
        std::string msg = "missing estimates for clips:";
        for (const auto& id : missing) msg += " " + id;
        throw std::invalid_argument(msg);
    }
    EvalReport report = aggregate(scores, manifest, "test");
    fs::create_directories(out_dir);
    atomic_write(out_dir / "report.txt", [&](std::ostream& out) { out << format_report_text(report); });
    atomic_write(out_dir / "report.json",
                 [&](std::ostream& out) { out << report_to_json(report).dump(2) << "\n"; });
    echo_config(cfg, out_dir);
    std::cout << format_report_text(report);
    std::cout << "reports in " << out_dir.string() << "\n";
    return 0;
}

int cmd_plot_energy(const RunConfig& cfg, const fs::path& clip, const fs::path& out_base) {
    AmbisonicsSignal sig = load_ambisonics_wav(clip, 0);
    EnergyPlotFiles files = emit_energy_plot(sig, out_base);
    if (!out_base.parent_path().empty()) echo_config(cfg, out_base.parent_path());
    std::cout << "wrote " << files.image.string() << " and " << files.table.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DiffAU: diffusion-based Ambisonics upscaling (FOA to 3rd order) with a PWD-CS baseline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    int jobs_flag = 0;
    app.add_option("--config", config_path, "JSON config file (default: $DIFFAU_CONFIG)");
    app.add_option("--seed", seed_flag, "override the config seed")->each([&](const std::string&) { seed_set = true; });
    app.add_option("--jobs", jobs_flag, "worker thread bound (0 = hardware)");

    std::string corpus_dir, out_dir, dataset_dir, ckpt_out, input, ckpt1, ckpt2, output, est_dir, ref_dir, clip;
    std::string resume_path;
    int block = 1;
    int n_clips_flag = -1;

    auto* synth = app.add_subcommand("synth-data", "synthesize a free-field multi-speaker HOA dataset");
    synth->add_option("--corpus", corpus_dir, "directory of mono WAV source files")->required();
    synth->add_option("--out", out_dir, "output dataset directory")->required();
    synth->add_option("--n-clips", n_clips_flag, "number of clips (overrides config)");

    auto* train = app.add_subcommand("train", "train one diffusion block");
    train->add_option("--dataset", dataset_dir, "dataset directory from synth-data")->required();
    train->add_option("--block", block, "block order N (1 or 2)")->required();
    train->add_option("--out", ckpt_out, "output checkpoint path")->required();
    train->add_option("--resume", resume_path, "checkpoint to continue from");

    auto* upscale = app.add_subcommand("upscale", "upscale a 4-channel FOA WAV to 16-channel HOA");
    upscale->add_option("--input", input, "4-channel 16 kHz WAV")->required();
    upscale->add_option("--block1", ckpt1, "block-1 checkpoint")->required();
    upscale->add_option("--block2", ckpt2, "block-2 checkpoint")->required();
    upscale->add_option("--out", output, "output 16-channel WAV")->required();

    auto* baseline = app.add_subcommand("baseline", "PWD-CS baseline upscaling of a FOA WAV");
    baseline->add_option("--input", input, "4-channel 16 kHz WAV")->required();
    baseline->add_option("--out", output, "output 16-channel WAV")->required();

    auto* eval = app.add_subcommand("eval", "STFT-SDR evaluation against dataset references");
    eval->add_option("--estimates", est_dir, "directory of estimated 16-channel WAVs named <clip_id>.wav")
        ->required();
    eval->add_option("--references", ref_dir, "dataset directory (manifest + clips)")->required();
    eval->add_option("--out", out_dir, "report output directory")->required();

    auto* plot = app.add_subcommand("plot-energy", "directional energy map of an Ambisonics WAV");
    plot->add_option("--clip", clip, "multichannel Ambisonics WAV")->required();
    plot->add_option("--out", output, "output basename (.ppm/.txt appended)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg = load_config(config_path.empty() ? fs::path{} : fs::path(config_path));
        if (seed_set) cfg.seed = seed_flag;
        if (jobs_flag > 0) cfg.jobs = jobs_flag;
        if (n_clips_flag > 0) cfg.dataset.n_clips = n_clips_flag;
        cfg.validate();
        if (cfg.jobs > 0) at::set_num_threads(cfg.jobs);

        if (synth->parsed()) return cmd_synth_data(cfg, corpus_dir, out_dir);
        if (train->parsed())
            return cmd_train(cfg, dataset_dir, block, ckpt_out,
                             resume_path.empty() ? std::nullopt : std::optional<fs::path>(resume_path));
        if (upscale->parsed()) return cmd_upscale(cfg, input, ckpt1, ckpt2, output);
        if (baseline->parsed()) return cmd_baseline(cfg, input, output);
        if (eval->parsed()) return cmd_eval(cfg, est_dir, ref_dir, out_dir);
        if (plot->parsed()) return cmd_plot_energy(cfg, clip, output);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
}
