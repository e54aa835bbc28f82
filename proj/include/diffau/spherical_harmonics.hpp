#pragma once

// Real spherical harmonics in the Ambisonics convention: ACN channel
// ordering, N3D (full 3-D) normalization, no Condon-Shortley phase.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "diffau/common.hpp"

namespace diffau {

// Direction of arrival on the unit sphere.
struct Direction {
    double azimuth = 0.0;     // [0, 2*pi)
    double colatitude = 0.0;  // [0, pi], 0 = +z pole
};

inline bool is_valid(const Direction& d) {
    return d.azimuth >= 0.0 && d.azimuth < kTwoPi && d.colatitude >= 0.0 && d.colatitude <= kPi;
}

// Uniform draw on the sphere: azimuth uniform, cos(colatitude) uniform.
inline Direction sample_doa(Rng& rng) {
    Direction d;
    d.azimuth = rng.uniform(0.0, kTwoPi);
    d.colatitude = std::acos(1.0 - 2.0 * rng.uniform());
    return d;
}

inline constexpr int acn_index(int degree, int order) { return degree * degree + degree + order; }

inline constexpr int num_sh_channels(int max_degree) { return (max_degree + 1) * (max_degree + 1); }

namespace detail {

// Associated Legendre P_n^m(x) for m >= 0, without the Condon-Shortley
// phase, via the standard stable recurrences.
inline double legendre_p(int n, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
        double fact = 1.0;
        for (int i = 0; i < m; ++i) {
            pmm *= fact * s;
            fact += 2.0;
        }
    }
    if (n == m) return pmm;
    double pmm1 = x * (2.0 * m + 1.0) * pmm;
    if (n == m + 1) return pmm1;
    double pll = 0.0;
    for (int l = m + 2; l <= n; ++l) {
        pll = ((2.0 * l - 1.0) * x * pmm1 - (l + m - 1.0) * pmm) / (l - m);
        pmm = pmm1;
        pmm1 = pll;
    }
    return pll;
}

inline double n3d_norm(int n, int am) {
    double ratio = 1.0;  // (n-|m|)! / (n+|m|)!
    for (int k = n - am + 1; k <= n + am; ++k) ratio /= k;
    double norm = std::sqrt((2.0 * n + 1.0) * ratio);
    if (am != 0) norm *= std::sqrt(2.0);
    return norm;
}

}  // namespace detail

// Real N3D spherical harmonic Y_n^m evaluated at a direction.
// Y_0^0 = 1; Y_1^0 = sqrt(3) cos(theta); Y_1^1 = sqrt(3) sin(theta) cos(phi).
inline double real_sh(int degree, int order, const Direction& dir) {
    if (degree < 0 || order < -degree || order > degree)
        throw std::domain_error("real_sh: need degree >= 0 and -degree <= order <= degree");
    const int am = std::abs(order);
    const double p = detail::legendre_p(degree, am, std::cos(dir.colatitude));
    const double norm = detail::n3d_norm(degree, am);
    if (order > 0) return norm * p * std::cos(am * dir.azimuth);
    if (order < 0) return norm * p * std::sin(am * dir.azimuth);
    return norm * p;
}

// Rows are directions, columns the (N+1)^2 SH terms in ACN order.
using SHMatrix = Eigen::MatrixXd;

inline SHMatrix sh_matrix(int max_degree, const std::vector<Direction>& directions) {
    if (max_degree < 0) throw std::domain_error("sh_matrix: negative order");
    if (directions.empty()) throw std::invalid_argument("sh_matrix: empty direction list");
    SHMatrix y(static_cast<Eigen::Index>(directions.size()), num_sh_channels(max_degree));
    for (Eigen::Index q = 0; q < y.rows(); ++q)
        for (int n = 0; n <= max_degree; ++n)
            for (int m = -n; m <= n; ++m)
                y(q, acn_index(n, m)) = real_sh(n, m, directions[static_cast<size_t>(q)]);
    return y;
}

}  // namespace diffau
