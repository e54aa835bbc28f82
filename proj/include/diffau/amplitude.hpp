#pragma once

// Magnitude compression for heavy-tailed speech spectra. The forward map
// raises the magnitude to alpha and divides by beta, keeping the phase;
// the inverse undoes exactly that, so the pair is an identity round trip.

#include <cmath>
#include <complex>

#include "diffau/common.hpp"
#include "diffau/tensors.hpp"

namespace diffau {

struct AmplitudeTransformParams {
    double alpha = 0.5;
    double beta = 0.15;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw config_error("amplitude: need 0 < alpha <= 1");
        if (!(beta > 0.0)) throw config_error("amplitude: need beta > 0");
    }

    friend bool operator==(const AmplitudeTransformParams&, const AmplitudeTransformParams&) = default;
};

inline std::complex<double> amp_compress(std::complex<double> x, const AmplitudeTransformParams& p) {
    const double mag = std::abs(x);
    if (mag == 0.0) return {0.0, 0.0};
    return std::polar(std::pow(mag, p.alpha) / p.beta, std::arg(x));
}

inline std::complex<double> amp_expand(std::complex<double> x, const AmplitudeTransformParams& p) {
    const double mag = std::abs(x);
    if (mag == 0.0) return {0.0, 0.0};
    return std::polar(std::pow(p.beta * mag, 1.0 / p.alpha), std::arg(x));
}

inline ComplexGrid amp_compress(const ComplexGrid& x, const AmplitudeTransformParams& p) {
    ComplexGrid out = x;
    for (auto& v : out.data) v = amp_compress(v, p);
    return out;
}

inline ComplexGrid amp_expand(const ComplexGrid& x, const AmplitudeTransformParams& p) {
    ComplexGrid out = x;
    for (auto& v : out.data) v = amp_expand(v, p);
    return out;
}

}  // namespace diffau
