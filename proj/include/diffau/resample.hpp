#pragma once

// Windowed-sinc resampling for corpus ingestion (arbitrary rational or
// irrational rate ratios; Hann-windowed kernel, 24 zero crossings).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "diffau/common.hpp"

namespace diffau {

inline std::vector<double> resample(const std::vector<double>& input, double rate_in, double rate_out) {
    if (rate_in <= 0.0 || rate_out <= 0.0) throw std::invalid_argument("resample: rates must be positive");
    if (input.empty() || rate_in == rate_out) return input;

    const double ratio = rate_out / rate_in;
    const size_t out_len = static_cast<size_t>(std::llround(static_cast<double>(input.size()) * ratio));
    std::vector<double> out(out_len, 0.0);

    const int zero_crossings = 24;
    // when downsampling, the kernel cutoff shrinks to the output Nyquist
    const double cutoff = std::min(1.0, ratio);
    const double half_width = zero_crossings / cutoff;

    for (size_t j = 0; j < out_len; ++j) {
        const double center = static_cast<double>(j) / ratio;
        const int lo = static_cast<int>(std::ceil(center - half_width));
        const int hi = static_cast<int>(std::floor(center + half_width));
        double acc = 0.0;
        for (int i = std::max(lo, 0); i <= std::min<int>(hi, static_cast<int>(input.size()) - 1); ++i) {
            const double x = (static_cast<double>(i) - center) * cutoff;
            double kernel;
            if (std::abs(x) < 1e-12) {
                kernel = 1.0;
            } else {
                const double px = kPi * x;
                kernel = std::sin(px) / px;
            }
            const double w = 0.5 + 0.5 * std::cos(kPi * x / zero_crossings);  // Hann taper
            acc += input[static_cast<size_t>(i)] * kernel * w * cutoff;
        }
        out[j] = acc;
    }
    return out;
}

}  // namespace diffau
