#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "diffau/spherical_harmonics.hpp"

using namespace diffau;

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration; with a
// uniform azimuth ring this integrates spherical polynomials exactly, so
// it serves as the independent orthonormality oracle.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[static_cast<size_t>(i)] = x;
        weights[static_cast<size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

}  // namespace

TEST_CASE("real SH closed-form values") {
    CHECK(real_sh(0, 0, {1.234, 2.345}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(real_sh(1, 0, {0.0, 0.0}) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
    CHECK(real_sh(1, 1, {0.0, kPi / 2}) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
    // sqrt(3) sin(theta) sin(phi) at phi = pi/2
    CHECK(real_sh(1, -1, {kPi / 2, kPi / 2}) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
}

TEST_CASE("real SH rejects invalid degree/order") {
    CHECK_THROWS_AS(real_sh(-1, 0, {0, 0}), std::domain_error);
    CHECK_THROWS_AS(real_sh(2, 3, {0, 0}), std::domain_error);
    CHECK_THROWS_AS(real_sh(2, -3, {0, 0}), std::domain_error);
}

TEST_CASE("N3D orthonormality via quadrature") {
    // 16 Gauss-Legendre colatitude nodes x 16 azimuths: exact for products
    // of SH up to degree 3 (band limit 6 < 16)
    std::vector<double> nodes, weights;
    gauss_legendre(16, nodes, weights);
    const int n_az = 16;

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(16, 16);
    for (int iq = 0; iq < 16; ++iq) {
        const double colat = std::acos(nodes[static_cast<size_t>(iq)]);
        for (int ia = 0; ia < n_az; ++ia) {
            const Direction dir{kTwoPi * ia / n_az, colat};
            Eigen::VectorXd y(16);
            for (int n = 0; n <= 3; ++n)
                for (int m = -n; m <= n; ++m) y(acn_index(n, m)) = real_sh(n, m, dir);
            // (1/4pi) * dOmega = w * (2pi/n_az) / 4pi
            gram += (weights[static_cast<size_t>(iq)] / (2.0 * n_az)) * (y * y.transpose());
        }
    }
    const double err = (gram - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff();
    CHECK(err < 1e-9);
}

TEST_CASE("sh_matrix layout and bounds") {
    CHECK(sh_matrix(0, {Direction{0.3, 1.1}})(0, 0) == Catch::Approx(1.0).margin(1e-15));

    const SHMatrix row = sh_matrix(1, {Direction{0.0, kPi / 2}});
    CHECK(row.cols() == 4);
    CHECK(row(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(row(0, 1) == Catch::Approx(0.0).margin(1e-12));
    CHECK(row(0, 2) == Catch::Approx(0.0).margin(1e-12));
    CHECK(row(0, 3) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));

    CHECK(sh_matrix(3, {Direction{2.5, 0.7}}).cols() == 16);
    CHECK_THROWS_AS(sh_matrix(1, {}), std::invalid_argument);

    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Direction d = sample_doa(rng);
        for (int n = 0; n <= 3; ++n)
            for (int m = -n; m <= n; ++m)
                CHECK(std::abs(real_sh(n, m, d)) <= std::sqrt(2.0 * n + 1.0) + 1e-12);
    }
}

TEST_CASE("ACN channel indexing") {
    CHECK(acn_index(0, 0) == 0);
    CHECK(acn_index(1, -1) == 1);
    CHECK(acn_index(1, 0) == 2);
    CHECK(acn_index(1, 1) == 3);
    CHECK(acn_index(3, 3) == 15);
    CHECK(num_sh_channels(3) == 16);
}

TEST_CASE("sample_doa distribution") {
    Rng rng(42);
    const Direction first = sample_doa(rng);
    Rng rng2(42);
    const Direction again = sample_doa(rng2);
    CHECK(first.azimuth == again.azimuth);
    CHECK(first.colatitude == again.colatitude);

    const int n = 100000;
    double cos_sum = 0.0;
    std::array<int, 8> az_bins{};
    Rng rng3(7);
    for (int i = 0; i < n; ++i) {
        const Direction d = sample_doa(rng3);
        REQUIRE(is_valid(d));
        cos_sum += std::cos(d.colatitude);
        ++az_bins[static_cast<size_t>(d.azimuth / (kTwoPi / 8))];
    }
    CHECK(std::abs(cos_sum / n) < 0.02);
    for (int count : az_bins) CHECK(std::abs(count / (n * 0.125) - 1.0) < 0.03);
}
