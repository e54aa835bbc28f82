#pragma once

// VE-SDE forward perturbation, denoising score matching, and the
// predictor-corrector sampler (reverse-diffusion predictor, annealed
// Langevin corrector). Tensor work runs on libtorch; every random draw
// flows through the caller's generator.

#include <torch/torch.h>

#include <functional>

#include "diffau/sde_schedule.hpp"

namespace diffau {

struct PCSamplerConfig {
    int predictor_steps = 30;
    int corrector_steps_per_predictor = 1;
    double snr = 0.5;
    // Optional extra mean step x += sigma_min^2 * score after the last
    // predictor iteration (one more score evaluation). Off by default:
    // the plain sampler returns the final state at the sigma_min level.
    bool final_denoise = false;

    void validate() const {
        if (predictor_steps < 1) throw config_error("sampler: need at least one predictor step");
        if (corrector_steps_per_predictor < 0) throw config_error("sampler: corrector step count must be >= 0");
        if (!(snr > 0.0)) throw config_error("sampler: snr must be positive");
    }
};

// Score callback for sampling: x and the diffusion time of the current level.
using ScoreFn = std::function<torch::Tensor(const torch::Tensor& x, double t)>;

// Score callback for training. The z and sigma arguments expose the loss
// draws so oracle scores (teacher forcing) can be expressed in tests;
// model adapters use only (x_t, y, t).
using TrainScoreFn = std::function<torch::Tensor(const torch::Tensor& x_t, const torch::Tensor& y,
                                                 const torch::Tensor& t, const torch::Tensor& sigma,
                                                 const torch::Tensor& z)>;

inline at::Generator make_generator(std::uint64_t seed) {
    auto gen = at::detail::createCPUGenerator();
    gen.set_current_seed(seed);
    return gen;
}

inline torch::Tensor perturb(const torch::Tensor& x0, double t, const torch::Tensor& z, const NoiseSchedule& sched) {
    if (!x0.sizes().equals(z.sizes())) throw std::invalid_argument("perturb: shape mismatch");
    return x0 + sigma(sched, t) * z;
}

// Empirical risk of Eq.-style denoising score matching: per item,
// ||s * sigma_t + z||^2 summed over elements, averaged over the batch.
// The residual is evaluated as (s + z/sigma) * sigma so a teacher-forced
// score of -z/sigma cancels identically.
inline torch::Tensor dsm_loss(const TrainScoreFn& score_fn, const torch::Tensor& x0, const torch::Tensor& y,
                              at::Generator& gen, const NoiseSchedule& sched) {
    if (x0.size(0) == 0) throw std::invalid_argument("dsm_loss: empty batch");
    if (y.size(0) != x0.size(0)) throw std::invalid_argument("dsm_loss: batch size mismatch between x0 and y");
    sched.validate();

    const int64_t batch = x0.size(0);
    const auto opts = x0.options();
    torch::Tensor u = torch::rand({batch}, gen, opts);
    torch::Tensor t = sched.t_eps + (1.0 - sched.t_eps) * u;
    torch::Tensor sigma_t = sched.sigma_min * torch::pow(sched.sigma_max / sched.sigma_min, t);

    std::vector<int64_t> bshape(static_cast<size_t>(x0.dim()), 1);
    bshape[0] = batch;
    torch::Tensor sigma_b = sigma_t.reshape(bshape);

    torch::Tensor z = torch::randn(x0.sizes(), gen, opts);
    torch::Tensor x_t = x0 + sigma_b * z;
    torch::Tensor s = score_fn(x_t, y, t, sigma_t, z);
    torch::Tensor residual = (s + z / sigma_b) * sigma_b;
    return residual.pow(2).flatten(1).sum(1).mean();
}

// Reverse-diffusion predictor: one step down the sigma grid,
// x' = x + (sigma_i^2 - sigma_{i-1}^2) * score + sqrt(sigma_i^2 - sigma_{i-1}^2) * z.
inline torch::Tensor predictor_step(const torch::Tensor& x, int i, const ScoreFn& score_fn, const SigmaGrid& grid,
                                    at::Generator& gen) {
    if (i < 1 || static_cast<size_t>(i) >= grid.sigmas.size())
        throw std::invalid_argument("predictor_step: index out of range");
    for (size_t j = 1; j < grid.sigmas.size(); ++j)
        if (!(grid.sigmas[j] > grid.sigmas[j - 1])) throw config_error("predictor_step: sigma grid is not monotone");

    const double s_hi = grid.sigmas[static_cast<size_t>(i)];
    const double s_lo = grid.sigmas[static_cast<size_t>(i) - 1];
    const double dvar = s_hi * s_hi - s_lo * s_lo;
    torch::Tensor score = score_fn(x, grid.times[static_cast<size_t>(i)]);
    torch::Tensor z = torch::randn(x.sizes(), gen, x.options());
    return x + dvar * score + std::sqrt(dvar) * z;
}

// Annealed Langevin corrector with step size 2*(snr*||z||/||s||)^2.
// A zero score degenerates the step; the state passes through unchanged.
inline torch::Tensor corrector_step(const torch::Tensor& x, double t, const ScoreFn& score_fn, double snr,
                                    at::Generator& gen) {
    if (!(snr > 0.0)) throw std::invalid_argument("corrector_step: snr must be positive");
    torch::Tensor score = score_fn(x, t);
    const double score_norm = score.norm().item<double>();
    if (score_norm == 0.0) return x;
    torch::Tensor z = torch::randn(x.sizes(), gen, x.options());
    const double noise_norm = z.norm().item<double>();
    const double eps = 2.0 * std::pow(snr * noise_norm / score_norm, 2.0);
    return x + eps * score + std::sqrt(2.0 * eps) * z;
}

// Full run: corrector sweeps before each predictor step, walking the
// geometric sigma grid from sigma_max down to sigma_min.
inline torch::Tensor pc_sample(const torch::Tensor& x_T, const ScoreFn& score_fn, const PCSamplerConfig& cfg,
                               const NoiseSchedule& sched, at::Generator& gen) {
    cfg.validate();
    const SigmaGrid grid = make_sigma_grid(sched, cfg.predictor_steps);
    torch::Tensor x = x_T;
    for (int i = cfg.predictor_steps; i >= 1; --i) {
        for (int c = 0; c < cfg.corrector_steps_per_predictor; ++c)
            x = corrector_step(x, grid.times[static_cast<size_t>(i)], score_fn, cfg.snr, gen);
        x = predictor_step(x, i, score_fn, grid, gen);
    }
    if (cfg.final_denoise) {
        const double s0 = grid.sigmas[0];
        x = x + s0 * s0 * score_fn(x, grid.times[0]);
    }
    return x;
}

}  // namespace diffau
