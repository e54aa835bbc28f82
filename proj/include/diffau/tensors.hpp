#pragma once

// Small dense grids used between the time-frequency transform and the
// diffusion stack, plus the real/complex stacking maps.

#include <complex>
#include <stdexcept>
#include <vector>

namespace diffau {

struct ComplexGrid {
    int channels = 0, bins = 0, frames = 0;
    std::vector<std::complex<double>> data;  // [channel][bin][frame], frame fastest

    ComplexGrid() = default;
    ComplexGrid(int c, int f, int t) : channels(c), bins(f), frames(t), data(static_cast<size_t>(c) * f * t) {}

    std::complex<double>& at(int c, int f, int t) {
        return data[(static_cast<size_t>(c) * bins + f) * frames + t];
    }
    const std::complex<double>& at(int c, int f, int t) const {
        return data[(static_cast<size_t>(c) * bins + f) * frames + t];
    }
    size_t size() const { return data.size(); }
};

struct RealGrid {
    int channels = 0, bins = 0, frames = 0;
    std::vector<double> data;

    RealGrid() = default;
    RealGrid(int c, int f, int t) : channels(c), bins(f), frames(t), data(static_cast<size_t>(c) * f * t) {}

    double& at(int c, int f, int t) { return data[(static_cast<size_t>(c) * bins + f) * frames + t]; }
    const double& at(int c, int f, int t) const {
        return data[(static_cast<size_t>(c) * bins + f) * frames + t];
    }
    size_t size() const { return data.size(); }
};

// Map R: c complex channels -> 2c real channels, real parts first.
inline RealGrid real_stack(const ComplexGrid& x) {
    RealGrid out(2 * x.channels, x.bins, x.frames);
    const size_t half = x.data.size();
    for (size_t i = 0; i < half; ++i) {
        out.data[i] = x.data[i].real();
        out.data[half + i] = x.data[i].imag();
    }
    return out;
}

// Map C: inverse of real_stack.
inline ComplexGrid complex_merge(const RealGrid& x) {
    if (x.channels % 2 != 0) throw std::invalid_argument("complex_merge: channel count must be even");
    ComplexGrid out(x.channels / 2, x.bins, x.frames);
    const size_t half = out.data.size();
    for (size_t i = 0; i < half; ++i) out.data[i] = {x.data[i], x.data[half + i]};
    return out;
}

}  // namespace diffau
