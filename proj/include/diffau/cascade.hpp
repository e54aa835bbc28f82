#pragma once

// The inference cascade: each block lifts the signal one Ambisonics order
// by sampling the missing TF channels from the block's conditional score
// model, concatenating them with the observed channels, and inverting the
// transform chain. Two blocks take FOA to third order.

#include <torch/torch.h>

#include "diffau/cascade_convert.hpp"
#include "diffau/diffusion.hpp"
#include "diffau/score_model.hpp"

namespace diffau {

// One block of the cascade: STFT -> compress -> stack -> draw x_T ->
// PC-sample conditioned channels -> merge -> expand -> concatenate with
// the observed channels -> ISTFT. The observed channels pass through the
// transform round trip unchanged up to reconstruction tolerance.
inline AmbisonicsSignal upscale_block(const AmbisonicsSignal& input, const ScoreModelParams& params,
                                      const PCSamplerConfig& sampler_cfg, at::Generator& gen) {
    if (input.order != params.config.block_order)
        throw std::invalid_argument("upscale_block: input order does not match the checkpoint's block order");
    sampler_cfg.validate();

    const TFSignal tf_in = stft(input, params.stft_config);
    const ComplexGrid compressed = amp_compress(tf_in.grid, params.amplitude);
    const torch::Tensor y = to_tensor(real_stack(compressed));

    const int out_ch = params.config.out_channels();
    torch::Tensor x_T = torch::randn({out_ch, compressed.bins, compressed.frames}, gen, torch::kFloat32) *
                        params.schedule.sigma_max;

    const ScoreFn score_fn = [&](const torch::Tensor& x, double t) {
        torch::NoGradGuard no_grad;
        return score_eval(params, x, y, t);
    };
    const torch::Tensor x0 = pc_sample(x_T, score_fn, sampler_cfg, params.schedule, gen);

    const ComplexGrid predicted = amp_expand(complex_merge(from_tensor(x0)), params.amplitude);

    TFSignal tf_out;
    tf_out.config = tf_in.config;
    tf_out.original_length = tf_in.original_length;
    tf_out.sample_rate = tf_in.sample_rate;
    tf_out.grid = ComplexGrid(tf_in.grid.channels + predicted.channels, tf_in.grid.bins, tf_in.grid.frames);
    for (int c = 0; c < tf_in.grid.channels; ++c)
        for (int f = 0; f < tf_in.grid.bins; ++f)
            for (int t = 0; t < tf_in.grid.frames; ++t) tf_out.grid.at(c, f, t) = tf_in.grid.at(c, f, t);
    for (int c = 0; c < predicted.channels; ++c)
        for (int f = 0; f < tf_in.grid.bins; ++f)
            for (int t = 0; t < tf_in.grid.frames; ++t)
                tf_out.grid.at(tf_in.grid.channels + c, f, t) = predicted.at(c, f, t);

    return istft(tf_out);
}

// FOA -> 2nd order -> 3rd order. Deterministic given the generator seed.
inline AmbisonicsSignal diffau_upscale(const AmbisonicsSignal& foa, const ScoreModelParams& block1,
                                       const ScoreModelParams& block2, const PCSamplerConfig& sampler_cfg,
                                       at::Generator& gen) {
    if (foa.order != 1) throw std::invalid_argument("diffau: input must be first order (4 channels)");
    if (block1.config.block_order != 1 || block2.config.block_order != 2)
        throw config_error("diffau: checkpoints must be for blocks 1 and 2");
    if (!(block1.stft_config == block2.stft_config) || !(block1.amplitude == block2.amplitude))
        throw config_error("diffau: the two checkpoints disagree on the transform front-end");

    const AmbisonicsSignal second = upscale_block(foa, block1, sampler_cfg, gen);
    return upscale_block(second, block2, sampler_cfg, gen);
}

}  // namespace diffau
