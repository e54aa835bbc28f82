#include <catch2/catch_amalgamated.hpp>

#include "diffau/cs_baseline.hpp"
#include "diffau/metrics.hpp"
#include "support/test_signals.hpp"

using namespace diffau;

TEST_CASE("fibonacci grid covers the sphere") {
    const DirectionGrid grid = make_fibonacci_grid(400);
    REQUIRE(grid.size() == 400);
    CHECK(grid.sh_low.rows() == 400);
    CHECK(grid.sh_low.cols() == 4);
    CHECK(grid.sh_high.cols() == 16);
    for (const auto& d : grid.directions) REQUIRE(is_valid(d));
    CHECK_THROWS_AS(make_fibonacci_grid(8), std::invalid_argument);
}

TEST_CASE("solve_sparse_bin: zero input gives zero output") {
    const DirectionGrid grid = make_fibonacci_grid(100);
    const SparseSolution sol = solve_sparse_bin(Eigen::Vector4cd::Zero(), grid, CSConfig{});
    CHECK(sol.coeffs.norm() == 0.0);
    CHECK(sol.converged);
}

TEST_CASE("solve_sparse_bin: exact 1-sparse on-grid recovery") {
    const DirectionGrid grid = make_fibonacci_grid(400);
    const int target = 123;
    const std::complex<double> amp{0.8, -0.4};
    const Eigen::Vector4cd b = grid.sh_low.row(target).transpose().cast<std::complex<double>>() * amp;

    const SparseSolution sol = solve_sparse_bin(b, grid, CSConfig{});
    double l1 = 0.0;
    for (int l = 0; l < 400; ++l) l1 += std::abs(sol.coeffs(l));
    CHECK(std::abs(sol.coeffs(target)) / l1 >= 0.99);
    CHECK(sol.residual <= 1e-3);

    // with a vanishing penalty the recovery becomes exact
    CSConfig tight;
    tight.lambda = 1e-8;
    tight.eps_rel = 1e-8;
    tight.max_iterations = 300;
    const SparseSolution exact = solve_sparse_bin(b, grid, tight);
    const Eigen::Vector4cd resid = grid.sh_low.transpose().cast<std::complex<double>>() * exact.coeffs - b;
    CHECK(resid.norm() <= 1e-6 * b.norm());
    CHECK(std::abs(exact.coeffs(target) - amp) <= 1e-4 * std::abs(amp));
}

TEST_CASE("solve_sparse_bin: two separated sources within 5% amplitude") {
    const DirectionGrid grid = make_fibonacci_grid(400);
    const int q1 = 40, q2 = 310;  // far apart on the spiral
    const std::complex<double> a1{1.0, 0.2}, a2{-0.5, 0.7};
    const Eigen::Vector4cd b = grid.sh_low.row(q1).transpose().cast<std::complex<double>>() * a1 +
                               grid.sh_low.row(q2).transpose().cast<std::complex<double>>() * a2;

    // oracle: least squares on the true support
    Eigen::MatrixXd a_sub(4, 2);
    a_sub.col(0) = grid.sh_low.row(q1).transpose();
    a_sub.col(1) = grid.sh_low.row(q2).transpose();
    const Eigen::Matrix2d gram = a_sub.transpose() * a_sub;
    const Eigen::Vector2cd rhs = a_sub.transpose().cast<std::complex<double>>() * b;
    const Eigen::Vector2cd oracle = gram.cast<std::complex<double>>().partialPivLu().solve(rhs);
    REQUIRE(std::abs(oracle(0) - a1) < 1e-9);

    CSConfig cfg;
    cfg.lambda = 1e-5;
    cfg.max_iterations = 300;
    const SparseSolution sol = solve_sparse_bin(b, grid, cfg);
    CHECK(std::abs(sol.coeffs(q1) - oracle(0)) <= 0.05 * std::abs(oracle(0)));
    CHECK(std::abs(sol.coeffs(q2) - oracle(1)) <= 0.05 * std::abs(oracle(1)));
}

TEST_CASE("solver objective is non-increasing") {
    const DirectionGrid grid = make_fibonacci_grid(200);
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::Vector4cd b;
        for (int i = 0; i < 4; ++i) b(i) = {rng.normal(), rng.normal()};
        std::vector<double> trace;
        solve_sparse_bin(b, grid, CSConfig{}, &trace);
        for (size_t k = 1; k < trace.size(); ++k) REQUIRE(trace[k] <= trace[k - 1] * (1.0 + 1e-12));
    }
}

TEST_CASE("solve_sparse_bin scaling equivariance") {
    const DirectionGrid grid = make_fibonacci_grid(200);
    Rng rng(10);
    Eigen::Vector4cd b;
    for (int i = 0; i < 4; ++i) b(i) = {rng.normal(), rng.normal()};
    const SparseSolution base = solve_sparse_bin(b, grid, CSConfig{});
    const SparseSolution scaled = solve_sparse_bin(Eigen::Vector4cd(3.7 * b), grid, CSConfig{});
    CHECK((scaled.coeffs - 3.7 * base.coeffs).norm() <= 1e-9 * base.coeffs.norm() * 3.7);
}

TEST_CASE("cs_upscale on silence returns silence") {
    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 4096);
    const AmbisonicsSignal out =
        cs_upscale(AmbisonicsSignal(1, zeros, 16000.0), make_fibonacci_grid(64), CSConfig{}, STFTConfig{}, 2);
    CHECK(out.order == 3);
    CHECK(out.channels.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cs_upscale recovers an on-grid broadband source") {
    const DirectionGrid grid = make_fibonacci_grid(400);
    Rng rng(11);
    PlaneWaveScene scene;
    scene.sample_rate = 16000.0;
    scene.sources.push_back(PlaneWaveSource{grid.directions[57], testing::synth_speechlike(rng, 8192), 1.0});
    const AmbisonicsSignal hoa = encode_scene(scene, 3);
    const AmbisonicsSignal foa = truncate(hoa, 1);

    const AmbisonicsSignal est = cs_upscale(foa, grid, CSConfig{}, STFTConfig{}, 2);

    // conditioning channels pass through the transform round trip
    for (int c = 0; c < 4; ++c)
        REQUIRE((est.channels.row(c) - foa.channels.row(c)).norm() <= 1e-6 * foa.channels.row(c).norm());

    CHECK(stft_sdr(est, hoa, STFTConfig{}) >= 40.0);
}

TEST_CASE("cs_upscale input validation") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(16, 4096);
    CHECK_THROWS_AS(cs_upscale(AmbisonicsSignal(3, m, 16000.0), make_fibonacci_grid(64), CSConfig{}, STFTConfig{}),
                    std::invalid_argument);
}
