#pragma once

// Training-pair construction and per-block denoising-score-matching
// training. Pairs hold the compressed, real-stacked TF tensors; training
// draws random time-frequency crops when configured, which keeps each
// gradient step cheap at desk scale.

#include <torch/torch.h>

#include <functional>
#include <vector>

#include "diffau/cascade_convert.hpp"
#include "diffau/diffusion.hpp"
#include "diffau/score_model.hpp"

namespace diffau {

struct TrainingPair {
    torch::Tensor y;   // (2(N+1)^2, F, T) float32
    torch::Tensor x0;  // (2(2N+3), F, T) float32
};

// y = R(H(STFT(first (N+1)^2 channels))); x0 = R(H(STFT(next 2N+3 channels))).
inline std::vector<TrainingPair> make_pairs(const std::vector<AmbisonicsSignal>& clips, int block_order,
                                            const STFTConfig& stft_cfg, const AmplitudeTransformParams& amp) {
    if (block_order < 1) throw std::invalid_argument("make_pairs: block order must be >= 1");
    std::vector<TrainingPair> pairs;
    pairs.reserve(clips.size());
    const int n_cond = num_sh_channels(block_order);
    const int n_target = 2 * block_order + 3;
    for (const auto& clip : clips) {
        if (clip.order < block_order + 1)
            throw std::invalid_argument("make_pairs: clip order too low for this block");
        const TFSignal tf = stft(clip, stft_cfg);
        const ComplexGrid compressed = amp_compress(tf.grid, amp);

        ComplexGrid cond(n_cond, compressed.bins, compressed.frames);
        ComplexGrid target(n_target, compressed.bins, compressed.frames);
        for (int c = 0; c < n_cond; ++c)
            for (int f = 0; f < compressed.bins; ++f)
                for (int t = 0; t < compressed.frames; ++t) cond.at(c, f, t) = compressed.at(c, f, t);
        for (int c = 0; c < n_target; ++c)
            for (int f = 0; f < compressed.bins; ++f)
                for (int t = 0; t < compressed.frames; ++t) target.at(c, f, t) = compressed.at(n_cond + c, f, t);

        pairs.push_back(TrainingPair{to_tensor(real_stack(cond)), to_tensor(real_stack(target))});
    }
    return pairs;
}

struct TrainConfig {
    int block_order = 1;
    int batch_size = 8;
    double step_size = 1e-4;  // optimizer step size (Adam)
    int total_steps = 4000;
    std::uint64_t seed = 0;
    int val_cadence = 500;    // steps between validation-loss probes
    int crop = 64;            // square TF crop; 0 trains on full tensors
    double lr_warm_frac = 0.1;  // fraction of steps before cosine decay begins

    void validate() const {
        if (block_order != 1 && block_order != 2) throw config_error("train: block_order must be 1 or 2");
        if (batch_size < 1 || total_steps < 1 || val_cadence < 1) throw config_error("train: counts must be positive");
        if (step_size < 0.0) throw config_error("train: step size must be nonnegative");
        if (crop < 0) throw config_error("train: crop must be nonnegative");
    }
};

struct LossPoint {
    int step = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when not probed at this step
};

struct TrainResult {
    ScoreModelParams params;
    std::vector<LossPoint> history;
};

namespace detail {

inline std::pair<torch::Tensor, torch::Tensor> draw_batch(const std::vector<TrainingPair>& pairs, int batch_size,
                                                          int crop, at::Generator& gen) {
    const int64_t n = static_cast<int64_t>(pairs.size());
    std::vector<torch::Tensor> ys, xs;
    torch::Tensor idx = torch::randint(0, n, {batch_size}, gen, torch::kInt64);
    const int64_t bins = pairs[0].x0.size(1), frames = pairs[0].x0.size(2);
    torch::Tensor offs;
    if (crop > 0 && crop < std::min(bins, frames)) {
        torch::Tensor of = torch::randint(0, bins - crop + 1, {batch_size}, gen, torch::kInt64);
        torch::Tensor ot = torch::randint(0, frames - crop + 1, {batch_size}, gen, torch::kInt64);
        offs = torch::stack({of, ot}, 1);
    }
    for (int b = 0; b < batch_size; ++b) {
        const auto& pair = pairs[static_cast<size_t>(idx[b].item<int64_t>())];
        if (offs.defined()) {
            const int64_t f0 = offs[b][0].item<int64_t>(), t0 = offs[b][1].item<int64_t>();
            ys.push_back(pair.y.slice(1, f0, f0 + crop).slice(2, t0, t0 + crop));
            xs.push_back(pair.x0.slice(1, f0, f0 + crop).slice(2, t0, t0 + crop));
        } else {
            ys.push_back(pair.y);
            xs.push_back(pair.x0);
        }
    }
    return {torch::stack(ys), torch::stack(xs)};
}

}  // namespace detail

// Train one diffusion block from scratch (or resume from `resume_from`).
// Deterministic given cfg.seed. Throws on a non-finite loss.
inline TrainResult train_block(const std::vector<TrainingPair>& pairs, const ScoreModelConfig& model_cfg,
                               const TrainConfig& cfg, const NoiseSchedule& sched, const STFTConfig& stft_cfg,
                               const AmplitudeTransformParams& amp,
                               const ScoreModelParams* resume_from = nullptr,
                               const std::function<void(const LossPoint&)>& on_progress = {}) {
    if (pairs.empty()) throw std::invalid_argument("train_block: no training pairs");
    cfg.validate();
    model_cfg.validate();
    if (model_cfg.block_order != cfg.block_order)
        throw config_error("train_block: model and train configs disagree on the block order");
    if (pairs[0].y.size(0) != model_cfg.cond_channels() || pairs[0].x0.size(0) != model_cfg.out_channels())
        throw std::invalid_argument("train_block: pair channel counts do not match the model config");

    TrainResult result;
    if (resume_from != nullptr) {
        if (resume_from->config != model_cfg)
            throw config_error("train_block: resume checkpoint has a different model config");
        result.params = *resume_from;
    } else {
        result.params = init_params(model_cfg, stft_cfg, amp, sched, derive_seed(cfg.seed, 0));
    }
    auto& params = result.params;
    params.net->train();

    torch::optim::Adam optimizer(params.net->parameters(), torch::optim::AdamOptions(cfg.step_size));
    at::Generator gen = make_generator(derive_seed(cfg.seed, 1));

    const TrainScoreFn model_fn = [&](const torch::Tensor& x_t, const torch::Tensor& y, const torch::Tensor& t,
                                      const torch::Tensor&, const torch::Tensor&) {
        return score_eval_batch(params, x_t, y, t);
    };

    auto validation_loss = [&]() {
        torch::NoGradGuard no_grad;
        at::Generator vgen = make_generator(derive_seed(cfg.seed, 2));
        double total = 0.0;
        for (const auto& pair : pairs) {
            torch::Tensor y = pair.y.unsqueeze(0), x0 = pair.x0.unsqueeze(0);
            if (cfg.crop > 0 && cfg.crop < std::min(x0.size(2), x0.size(3))) {
                const int64_t f0 = (x0.size(2) - cfg.crop) / 2, t0 = (x0.size(3) - cfg.crop) / 2;
                y = y.slice(2, f0, f0 + cfg.crop).slice(3, t0, t0 + cfg.crop);
                x0 = x0.slice(2, f0, f0 + cfg.crop).slice(3, t0, t0 + cfg.crop);
            }
            total += dsm_loss(model_fn, x0, y, vgen, sched).item<double>();
        }
        return total / static_cast<double>(pairs.size());
    };

    const int warm = std::max(1, static_cast<int>(cfg.lr_warm_frac * cfg.total_steps));
    for (int step = 1; step <= cfg.total_steps; ++step) {
        // constant step size through the warm phase, cosine decay to 10% after
        double lr = cfg.step_size;
        if (step > warm) {
            const double u = static_cast<double>(step - warm) / std::max(1, cfg.total_steps - warm);
            lr = cfg.step_size * (0.1 + 0.45 * (1.0 + std::cos(kPi * u)));
        }
        for (auto& group : optimizer.param_groups())
            static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);

        auto [y, x0] = detail::draw_batch(pairs, cfg.batch_size, cfg.crop, gen);
        optimizer.zero_grad();
        torch::Tensor loss = dsm_loss(model_fn, x0, y, gen, sched);
        const double loss_val = loss.item<double>();
        if (!std::isfinite(loss_val))
            throw std::runtime_error("train_block: training diverged (non-finite loss at step " +
                                     std::to_string(step) + ")");
        loss.backward();
        optimizer.step();

        if (step % cfg.val_cadence == 0 || step == cfg.total_steps) {
            LossPoint point{step, loss_val, validation_loss()};
            result.history.push_back(point);
            if (on_progress) on_progress(point);
        }
    }
    params.net->eval();
    return result;
}

}  // namespace diffau
