#pragma once

// Plane-wave Ambisonics encoding in the free field, order truncation and
// directional energy analysis. Channels are ACN-ordered, N3D-normalized;
// free-field plane-wave encoding is frequency-flat, so it reduces to one
// matrix multiply in the time domain.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "diffau/spherical_harmonics.hpp"

namespace diffau {

struct PlaneWaveSource {
    Direction doa;
    std::vector<double> waveform;
    double gain = 1.0;
};

struct PlaneWaveScene {
    std::vector<PlaneWaveSource> sources;
    double sample_rate = 16000.0;
};

struct AmbisonicsSignal {
    int order = 0;
    // (order+1)^2 rows, one per ACN channel; columns are time samples.
    Eigen::MatrixXd channels;
    double sample_rate = 16000.0;

    AmbisonicsSignal() = default;
    AmbisonicsSignal(int order_, Eigen::MatrixXd channels_, double sample_rate_)
        : order(order_), channels(std::move(channels_)), sample_rate(sample_rate_) {
        if (order < 0) throw std::invalid_argument("AmbisonicsSignal: negative order");
        if (channels.rows() != num_sh_channels(order))
            throw std::invalid_argument("AmbisonicsSignal: channel count does not match order");
        if (sample_rate <= 0.0) throw std::invalid_argument("AmbisonicsSignal: sample_rate must be positive");
    }

    Eigen::Index num_samples() const { return channels.cols(); }
    Eigen::Index num_channels() const { return channels.rows(); }
};

// Infer the Ambisonics order from a channel count; throws if the count is
// not a perfect square.
inline int order_from_channels(Eigen::Index count) {
    const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
    if (count <= 0 || static_cast<Eigen::Index>(root) * root != count)
        throw std::invalid_argument("channel count is not (N+1)^2");
    return root - 1;
}

inline void validate(const PlaneWaveScene& scene) {
    if (scene.sources.empty()) throw std::invalid_argument("scene has no sources");
    if (scene.sample_rate <= 0.0) throw std::invalid_argument("scene sample_rate must be positive");
    const size_t len = scene.sources.front().waveform.size();
    for (const auto& src : scene.sources)
        if (src.waveform.size() != len)
            throw std::invalid_argument("scene waveforms must share a common length");
}

// a_N(tau) = Y^T s(tau) with Y the SH matrix of the scene DOAs.
inline AmbisonicsSignal encode_scene(const PlaneWaveScene& scene, int order) {
    if (order < 0) throw std::invalid_argument("encode_scene: negative order");
    validate(scene);
    const Eigen::Index q = static_cast<Eigen::Index>(scene.sources.size());
    const Eigen::Index tau = static_cast<Eigen::Index>(scene.sources.front().waveform.size());

    std::vector<Direction> doas;
    doas.reserve(scene.sources.size());
    for (const auto& src : scene.sources) doas.push_back(src.doa);
    const SHMatrix y = sh_matrix(order, doas);  // q x (order+1)^2

    Eigen::MatrixXd sources(q, tau);
    for (Eigen::Index i = 0; i < q; ++i)
        sources.row(i) = scene.sources[static_cast<size_t>(i)].gain *
                         Eigen::Map<const Eigen::RowVectorXd>(scene.sources[static_cast<size_t>(i)].waveform.data(), tau);

    return AmbisonicsSignal(order, y.transpose() * sources, scene.sample_rate);
}

// First (target+1)^2 channels, unchanged: the sampling matrix [I | 0].
inline AmbisonicsSignal truncate(const AmbisonicsSignal& sig, int target_order) {
    if (target_order < 0 || target_order > sig.order)
        throw std::invalid_argument("truncate: target order must be in [0, signal order]");
    return AmbisonicsSignal(target_order, sig.channels.topRows(num_sh_channels(target_order)), sig.sample_rate);
}

// Directional energy on a regular azimuth x colatitude grid.
// values(i, j) is the energy steered to azimuth i*azimuth_step,
// colatitude j*colatitude_step; azimuth covers [0, 2*pi) half-open and
// colatitude [0, pi] inclusive of both poles. The grid is normalized so
// the largest cell equals one, except for an all-zero signal.
struct EnergyMap {
    double azimuth_step = 0.0;
    double colatitude_step = 0.0;
    Eigen::MatrixXd values;  // azimuth count x colatitude count

    Direction cell_direction(Eigen::Index az_idx, Eigen::Index col_idx) const {
        return Direction{azimuth_step * static_cast<double>(az_idx),
                         colatitude_step * static_cast<double>(col_idx)};
    }
};

inline EnergyMap directional_energy_map(const AmbisonicsSignal& sig, double azimuth_step, double colatitude_step) {
    if (azimuth_step <= 0.0 || colatitude_step <= 0.0)
        throw std::invalid_argument("energy map: steps must be positive");
    const double na = kTwoPi / azimuth_step;
    const double nc = kPi / colatitude_step;
    if (std::abs(na - std::round(na)) > 1e-9 || std::abs(nc - std::round(nc)) > 1e-9)
        throw std::invalid_argument("energy map: steps must divide the angular ranges");
    const Eigen::Index n_az = static_cast<Eigen::Index>(std::llround(na));
    const Eigen::Index n_col = static_cast<Eigen::Index>(std::llround(nc)) + 1;

    std::vector<Direction> dirs;
    dirs.reserve(static_cast<size_t>(n_az * n_col));
    for (Eigen::Index i = 0; i < n_az; ++i)
        for (Eigen::Index j = 0; j < n_col; ++j)
            dirs.push_back(Direction{azimuth_step * static_cast<double>(i), colatitude_step * static_cast<double>(j)});

    const SHMatrix y = sh_matrix(sig.order, dirs);          // (n_az*n_col) x channels
    const Eigen::VectorXd energy = (y * sig.channels).rowwise().squaredNorm();

    EnergyMap map;
    map.azimuth_step = azimuth_step;
    map.colatitude_step = colatitude_step;
    map.values.resize(n_az, n_col);
    for (Eigen::Index i = 0; i < n_az; ++i)
        for (Eigen::Index j = 0; j < n_col; ++j) map.values(i, j) = energy(i * n_col + j);

    const double peak = map.values.maxCoeff();
    if (peak > 0.0) map.values /= peak;
    return map;
}

}  // namespace diffau
