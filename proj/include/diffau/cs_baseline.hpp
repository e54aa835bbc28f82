#pragma once

// Plane-wave decomposition baseline: per TF bin, recover a sparse
// plane-wave amplitude vector over a direction dictionary from the four
// first-order channels, then re-encode to third order. The sparse solve
// is an iteratively reweighted least-squares (majorize-minimize) scheme
// for the l1-penalized residual.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "diffau/ambisonics.hpp"
#include "diffau/stft.hpp"

namespace diffau {

struct CSConfig {
    double eps_rel = 1e-4;     // target relative residual
    int max_iterations = 100;
    double lambda = 1e-3;      // l1 penalty weight (input is solved at unit norm)
    double bin_energy_floor = 1e-10;  // skip bins below this fraction of the peak bin energy

    void validate() const {
        if (!(eps_rel > 0.0)) throw config_error("cs: eps_rel must be positive");
        if (max_iterations < 1) throw config_error("cs: need at least one iteration");
        if (!(lambda >= 0.0)) throw config_error("cs: lambda must be nonnegative");
    }
};

// Direction dictionary with precomputed low- and high-order SH matrices.
struct DirectionGrid {
    std::vector<Direction> directions;
    Eigen::MatrixXd sh_low;   // L x 4
    Eigen::MatrixXd sh_high;  // L x 16

    explicit DirectionGrid(std::vector<Direction> dirs) : directions(std::move(dirs)) {
        if (directions.size() < 16)
            throw std::invalid_argument("DirectionGrid: need at least 16 directions");
        sh_low = sh_matrix(1, directions);
        sh_high = sh_matrix(3, directions);
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(directions.size()); }
};

// Near-uniform spherical coverage via the golden-angle spiral.
inline DirectionGrid make_fibonacci_grid(int count = 400) {
    std::vector<Direction> dirs;
    dirs.reserve(static_cast<size_t>(count));
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        double az = std::fmod(golden_angle * i, kTwoPi);
        if (az < 0.0) az += kTwoPi;
        dirs.push_back(Direction{az, std::acos(z)});
    }
    return DirectionGrid(std::move(dirs));
}

struct SparseSolution {
    Eigen::VectorXcd coeffs;  // L plane-wave amplitudes
    double residual = 0.0;    // relative to the input norm
    int iterations = 0;
    bool converged = false;
};

// min lambda*sum|s_l| + 0.5*||A s - b||^2 with A = sh_low^T (4 x L).
// The input is normalized to unit norm before solving and the solution
// scaled back, so the solver is exactly equivariant to input scaling.
// objective_trace, when given, receives the smoothed objective after each
// iteration (non-increasing by the majorize-minimize construction).
inline SparseSolution solve_sparse_bin(const Eigen::Vector4cd& a1_bin, const DirectionGrid& grid,
                                       const CSConfig& cfg, std::vector<double>* objective_trace = nullptr) {
    cfg.validate();
    const Eigen::Index L = grid.size();
    SparseSolution sol;
    sol.coeffs = Eigen::VectorXcd::Zero(L);

    const double bnorm = a1_bin.norm();
    if (!(bnorm > 0.0)) {
        sol.converged = true;
        return sol;
    }
    const Eigen::Vector4cd b = a1_bin / bnorm;

    const Eigen::MatrixXd& at = grid.sh_low;  // L x 4 (columns of A as rows)
    const double delta = 1e-9;

    // start from the min-norm least-squares solution
    Eigen::Matrix4d gram0 = at.transpose() * at / static_cast<double>(L);
    Eigen::Matrix4cd k0 = (gram0 + 1e-12 * Eigen::Matrix4d::Identity()).cast<std::complex<double>>();
    Eigen::Vector4cd u0 = k0.partialPivLu().solve(b);
    Eigen::VectorXcd s =
        (at * u0.real().eval()).array().cast<std::complex<double>>() / static_cast<double>(L) +
        std::complex<double>(0, 1) * (at * u0.imag().eval()).array().cast<std::complex<double>>() / static_cast<double>(L);

    auto objective = [&](const Eigen::VectorXcd& v, const Eigen::Vector4cd& r) {
        double l1 = 0.0;
        for (Eigen::Index l = 0; l < L; ++l) l1 += std::sqrt(std::norm(v(l)) + delta * delta);
        return cfg.lambda * l1 + 0.5 * r.squaredNorm();
    };

    Eigen::Vector4cd resid = at.transpose().cast<std::complex<double>>() * s - b;
    double obj = objective(s, resid);

    const double lambda = std::max(cfg.lambda, 1e-15);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        sol.iterations = it + 1;
        // surrogate weights d_l = sqrt(|s_l|^2 + delta^2) / lambda
        Eigen::VectorXd d(L);
        for (Eigen::Index l = 0; l < L; ++l) d(l) = std::sqrt(std::norm(s(l)) + delta * delta) / lambda;
        // K = A D A^T + I (real 4x4), solve K u = b
        Eigen::Matrix4d k = at.transpose() * d.asDiagonal() * at + Eigen::Matrix4d::Identity();
        Eigen::Matrix4cd kc = k.cast<std::complex<double>>();
        Eigen::Vector4cd u = kc.partialPivLu().solve(b);
        // s = D A^T u
        Eigen::VectorXd vr = at * u.real().eval();
        Eigen::VectorXd vi = at * u.imag().eval();
        for (Eigen::Index l = 0; l < L; ++l) s(l) = d(l) * std::complex<double>(vr(l), vi(l));

        resid = at.transpose().cast<std::complex<double>>() * s - b;
        const double new_obj = objective(s, resid);
        const double rel_change = std::abs(obj - new_obj) / std::max(1e-300, obj);
        obj = new_obj;
        if (objective_trace) objective_trace->push_back(new_obj);
        if (resid.norm() <= cfg.eps_rel || rel_change < 1e-12) {
            sol.converged = true;
            break;
        }
    }
    sol.residual = resid.norm();
    sol.coeffs = s * bnorm;
    return sol;
}

struct CSUpscaleStats {
    long solved_bins = 0;
    long skipped_bins = 0;
    long unconverged_bins = 0;
};

// Per-bin sparse decomposition of the FOA input, re-encoded to 3rd order.
// Channels 1-4 of the output carry the input through unchanged.
inline AmbisonicsSignal cs_upscale(const AmbisonicsSignal& foa, const DirectionGrid& grid, const CSConfig& cfg,
                                   const STFTConfig& stft_cfg, int jobs = 0, CSUpscaleStats* stats = nullptr) {
    if (foa.order != 1) throw std::invalid_argument("cs_upscale: input must be first order");
    cfg.validate();

    const TFSignal tf_in = stft(foa, stft_cfg);
    const int bins = tf_in.grid.bins, frames = tf_in.grid.frames;

    double peak_energy = 0.0;
    for (int f = 0; f < bins; ++f)
        for (int t = 0; t < frames; ++t) {
            double e = 0.0;
            for (int c = 0; c < 4; ++c) e += std::norm(tf_in.grid.at(c, f, t));
            peak_energy = std::max(peak_energy, e);
        }

    TFSignal tf_out;
    tf_out.grid = ComplexGrid(16, bins, frames);
    tf_out.config = tf_in.config;
    tf_out.original_length = tf_in.original_length;
    tf_out.sample_rate = tf_in.sample_rate;

    const Eigen::MatrixXd high_t = grid.sh_high.transpose();  // 16 x L

    std::atomic<long> solved{0}, skipped{0}, unconverged{0};
    const int n_workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    const long total = static_cast<long>(bins) * frames;

    auto worker = [&](long lo, long hi) {
        for (long idx = lo; idx < hi; ++idx) {
            const int f = static_cast<int>(idx / frames);
            const int t = static_cast<int>(idx % frames);
            Eigen::Vector4cd b;
            double e = 0.0;
            for (int c = 0; c < 4; ++c) {
                b(c) = tf_in.grid.at(c, f, t);
                e += std::norm(b(c));
            }
            for (int c = 0; c < 4; ++c) tf_out.grid.at(c, f, t) = b(c);
            if (e <= cfg.bin_energy_floor * peak_energy) {
                ++skipped;
                continue;
            }
            const SparseSolution sol = solve_sparse_bin(b, grid, cfg);
            ++solved;
            if (!sol.converged) ++unconverged;
            const Eigen::VectorXd hr = high_t * sol.coeffs.real().eval();
            const Eigen::VectorXd hi_part = high_t * sol.coeffs.imag().eval();
            for (int c = 4; c < 16; ++c)
                tf_out.grid.at(c, f, t) = std::complex<double>(hr(c), hi_part(c));
        }
    };

    if (n_workers <= 1) {
        worker(0, total);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (total + n_workers - 1) / n_workers;
        for (int w = 0; w < n_workers; ++w) {
            const long lo = w * chunk;
            if (lo >= total) break;
            pool.emplace_back(worker, lo, std::min(total, lo + chunk));
        }
        for (auto& th : pool) th.join();
    }

    if (stats) *stats = CSUpscaleStats{solved.load(), skipped.load(), unconverged.load()};
    return istft(tf_out);
}

}  // namespace diffau
