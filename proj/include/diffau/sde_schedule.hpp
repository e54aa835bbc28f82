#pragma once

// Variance-exploding SDE schedule: zero drift, geometric noise growth
// sigma(t) = sigma_min * (sigma_max/sigma_min)^t, and the matching
// diffusion coefficient g(t) with g(t)^2 = d/dt sigma^2(t).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "diffau/common.hpp"

namespace diffau {

struct NoiseSchedule {
    double sigma_min = 0.05;
    double sigma_max = 0.5;
    double t_eps = 1e-3;

    void validate() const {
        if (!(sigma_min > 0.0 && sigma_min < sigma_max))
            throw config_error("schedule: need 0 < sigma_min < sigma_max");
        if (!(t_eps > 0.0 && t_eps < 1.0)) throw config_error("schedule: need 0 < t_eps < 1");
    }

    friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

inline double sigma(const NoiseSchedule& sched, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sigma: t must be in [0, 1]");
    return sched.sigma_min * std::pow(sched.sigma_max / sched.sigma_min, t);
}

inline double diffusion_coeff(const NoiseSchedule& sched, double t) {
    if (!(sched.sigma_max > sched.sigma_min))
        throw config_error("diffusion_coeff: degenerate schedule (sigma_max <= sigma_min)");
    const double ratio = sched.sigma_max / sched.sigma_min;
    return sched.sigma_min * std::pow(ratio, t) * std::sqrt(2.0 * std::log(ratio));
}

// Descending-in-use sigma grid for predictor-corrector sampling: index j
// holds sigma(t_j) with t_j uniform on [t_eps, 1], so sigmas[0] is the
// smallest level and sigmas[n] == sigma_max's level. The sampler walks
// from index n down to 1.
struct SigmaGrid {
    std::vector<double> sigmas;
    std::vector<double> times;
};

inline SigmaGrid make_sigma_grid(const NoiseSchedule& sched, int n_steps) {
    if (n_steps < 1) throw std::invalid_argument("make_sigma_grid: need at least one step");
    sched.validate();
    SigmaGrid grid;
    grid.sigmas.resize(static_cast<size_t>(n_steps) + 1);
    grid.times.resize(static_cast<size_t>(n_steps) + 1);
    for (int j = 0; j <= n_steps; ++j) {
        const double t = sched.t_eps + (1.0 - sched.t_eps) * static_cast<double>(j) / n_steps;
        grid.times[static_cast<size_t>(j)] = t;
        grid.sigmas[static_cast<size_t>(j)] = sigma(sched, t);
    }
    return grid;
}

}  // namespace diffau
