#pragma once

// One declarative run configuration covering every pipeline stage. JSON on
// disk; CLI flags override file values. Each section validates against its
// owning module before any work starts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "diffau/amplitude.hpp"
#include "diffau/cs_baseline.hpp"
#include "diffau/dataset.hpp"
#include "diffau/score_model.hpp"
#include "diffau/sde_schedule.hpp"
#include "diffau/stft.hpp"

namespace diffau {

struct DatasetConfig {
    int n_clips = 32;
    SplitSpec split;
};

struct BaselineConfig {
    int grid_size = 400;
    CSConfig solver;
};

struct TrainSection {
    int batch_size = 8;
    double step_size = 1e-4;
    int total_steps = 4000;
    int val_cadence = 500;
    int crop = 64;
};

struct SamplerSection {
    int predictor_steps = 30;
    int corrector_steps_per_predictor = 1;
    double snr = 0.5;
    bool final_denoise = false;  // extra mean step after the last predictor
};

struct RunConfig {
    STFTConfig stft;
    AmplitudeTransformParams amplitude;
    NoiseSchedule schedule;
    SamplerSection sampler;
    ScoreModelConfig model1{1, 32, 3, 128};
    ScoreModelConfig model2{2, 32, 3, 128};
    TrainSection train1;
    TrainSection train2;
    DatasetConfig dataset;
    BaselineConfig baseline;
    std::uint64_t seed = 0;
    int jobs = 0;  // 0 = hardware default

    void validate() const {
        stft.validate();
        amplitude.validate();
        schedule.validate();
        model1.validate();
        model2.validate();
        if (model1.block_order != 1 || model2.block_order != 2)
            throw config_error("config: model1/model2 must have block orders 1 and 2");
        baseline.solver.validate();
        dataset.split.validate();
        if (dataset.n_clips < 1) throw config_error("config: dataset.n_clips must be positive");
        if (sampler.predictor_steps < 1 || sampler.corrector_steps_per_predictor < 0 || !(sampler.snr > 0))
            throw config_error("config: bad sampler section");
        if (baseline.grid_size < 16) throw config_error("config: baseline.grid_size must be >= 16");
    }
};

namespace detail {
template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}
}  // namespace detail

inline void config_from_json(const nlohmann::json& j, RunConfig& cfg) {
    using detail::get_if;
    if (j.contains("stft")) {
        const auto& s = j.at("stft");
        get_if(s, "window_length", cfg.stft.window_length);
        get_if(s, "hop", cfg.stft.hop);
        get_if(s, "fft_size", cfg.stft.fft_size);
        get_if(s, "window", cfg.stft.window);
    }
    if (j.contains("amplitude")) {
        get_if(j.at("amplitude"), "alpha", cfg.amplitude.alpha);
        get_if(j.at("amplitude"), "beta", cfg.amplitude.beta);
    }
    if (j.contains("schedule")) {
        get_if(j.at("schedule"), "sigma_min", cfg.schedule.sigma_min);
        get_if(j.at("schedule"), "sigma_max", cfg.schedule.sigma_max);
        get_if(j.at("schedule"), "t_eps", cfg.schedule.t_eps);
    }
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        get_if(s, "predictor_steps", cfg.sampler.predictor_steps);
        get_if(s, "corrector_steps_per_predictor", cfg.sampler.corrector_steps_per_predictor);
        get_if(s, "snr", cfg.sampler.snr);
        get_if(s, "final_denoise", cfg.sampler.final_denoise);
    }
    auto read_model = [](const nlohmann::json& m, ScoreModelConfig& mc) {
        get_if(m, "base_width", mc.base_width);
        get_if(m, "depth", mc.depth);
        get_if(m, "time_embed_dim", mc.time_embed_dim);
    };
    if (j.contains("model")) {
        if (j.at("model").contains("block1")) read_model(j.at("model").at("block1"), cfg.model1);
        if (j.at("model").contains("block2")) read_model(j.at("model").at("block2"), cfg.model2);
    }
    auto read_train = [](const nlohmann::json& t, TrainSection& ts) {
        get_if(t, "batch_size", ts.batch_size);
        get_if(t, "step_size", ts.step_size);
        get_if(t, "total_steps", ts.total_steps);
        get_if(t, "val_cadence", ts.val_cadence);
        get_if(t, "crop", ts.crop);
    };
    if (j.contains("training")) {
        if (j.at("training").contains("block1")) read_train(j.at("training").at("block1"), cfg.train1);
        if (j.at("training").contains("block2")) read_train(j.at("training").at("block2"), cfg.train2);
    }
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        get_if(d, "n_clips", cfg.dataset.n_clips);
        if (d.contains("split")) {
            get_if(d.at("split"), "train", cfg.dataset.split.train);
            get_if(d.at("split"), "val", cfg.dataset.split.val);
            get_if(d.at("split"), "test", cfg.dataset.split.test);
        }
    }
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        get_if(b, "grid_size", cfg.baseline.grid_size);
        get_if(b, "eps_rel", cfg.baseline.solver.eps_rel);
        get_if(b, "max_iterations", cfg.baseline.solver.max_iterations);
        get_if(b, "lambda", cfg.baseline.solver.lambda);
    }
    detail::get_if(j, "seed", cfg.seed);
    detail::get_if(j, "jobs", cfg.jobs);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    return {
        {"stft",
         {{"window_length", c.stft.window_length},
          {"hop", c.stft.hop},
          {"fft_size", c.stft.fft_size},
          {"window", c.stft.window}}},
        {"amplitude", {{"alpha", c.amplitude.alpha}, {"beta", c.amplitude.beta}}},
        {"schedule",
         {{"sigma_min", c.schedule.sigma_min}, {"sigma_max", c.schedule.sigma_max}, {"t_eps", c.schedule.t_eps}}},
        {"sampler",
         {{"predictor_steps", c.sampler.predictor_steps},
          {"corrector_steps_per_predictor", c.sampler.corrector_steps_per_predictor},
          {"snr", c.sampler.snr},
          {"final_denoise", c.sampler.final_denoise}}},
        {"model",
         {{"block1",
           {{"base_width", c.model1.base_width},
            {"depth", c.model1.depth},
            {"time_embed_dim", c.model1.time_embed_dim}}},
          {"block2",
           {{"base_width", c.model2.base_width},
            {"depth", c.model2.depth},
            {"time_embed_dim", c.model2.time_embed_dim}}}}},
        {"training",
         {{"block1",
           {{"batch_size", c.train1.batch_size},
            {"step_size", c.train1.step_size},
            {"total_steps", c.train1.total_steps},
            {"val_cadence", c.train1.val_cadence},
            {"crop", c.train1.crop}}},
          {"block2",
           {{"batch_size", c.train2.batch_size},
            {"step_size", c.train2.step_size},
            {"total_steps", c.train2.total_steps},
            {"val_cadence", c.train2.val_cadence},
            {"crop", c.train2.crop}}}}},
        {"dataset",
         {{"n_clips", c.dataset.n_clips},
          {"split",
           {{"train", c.dataset.split.train}, {"val", c.dataset.split.val}, {"test", c.dataset.split.test}}}}},
        {"baseline",
         {{"grid_size", c.baseline.grid_size},
          {"eps_rel", c.baseline.solver.eps_rel},
          {"max_iterations", c.baseline.solver.max_iterations},
          {"lambda", c.baseline.solver.lambda}}},
        {"seed", c.seed},
        {"jobs", c.jobs}};
}

// Load order: built-in defaults, then the file (explicit path, else the
// DIFFAU_CONFIG environment variable), then caller-applied flag overrides.
inline RunConfig load_config(const std::filesystem::path& explicit_path = {}) {
    RunConfig cfg;
    std::filesystem::path path = explicit_path;
    if (path.empty()) {
        if (const char* env = std::getenv("DIFFAU_CONFIG")) path = env;
    }
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("config parse error: ") + e.what());
        }
        config_from_json(j, cfg);
    }
    return cfg;
}

inline void echo_config(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    atomic_write(out_dir / "config_used.json", [&](std::ostream& out) { out << config_to_json(cfg).dump(2) << "\n"; });
}

}  // namespace diffau
