// Run the predictor-corrector sampler against the analytic score of a
// Gaussian target and report the recovered moments.

#include <torch/torch.h>

#include <iostream>

#include "diffau/diffusion.hpp"

using namespace diffau;

int main() {
    const NoiseSchedule sched{0.05, 0.5, 1e-3};
    const double mu = 0.3, v = 0.1 * 0.1;
    const ScoreFn analytic = [&](const torch::Tensor& x, double t) {
        const double st = sigma(sched, t);
        return (mu - x) / (v + st * st);
    };

    at::Generator gen = make_generator(7);
    torch::Tensor x_T = torch::randn({20000}, gen) * sched.sigma_max;
    torch::Tensor out = pc_sample(x_T, analytic, PCSamplerConfig{}, sched, gen);

    std::cout << "target: mean " << mu << ", std " << std::sqrt(v + sched.sigma_min * sched.sigma_min)
              << " (includes the sigma_min noise floor)\n";
    std::cout << "sampled: mean " << out.mean().item<double>() << ", std " << out.std().item<double>() << "\n";
    return 0;
}
