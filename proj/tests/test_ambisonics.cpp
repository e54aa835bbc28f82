#include <catch2/catch_amalgamated.hpp>

#include "diffau/ambisonics.hpp"
#include "support/test_signals.hpp"

using namespace diffau;

namespace {

PlaneWaveScene impulse_scene(const Direction& doa, int n = 64, int at = 7) {
    PlaneWaveScene scene;
    scene.sample_rate = 16000.0;
    PlaneWaveSource src;
    src.doa = doa;
    src.waveform.assign(static_cast<size_t>(n), 0.0);
    src.waveform[static_cast<size_t>(at)] = 1.0;
    scene.sources.push_back(std::move(src));
    return scene;
}

}  // namespace

TEST_CASE("encode_scene single impulse matches the SH row") {
    const AmbisonicsSignal sig = encode_scene(impulse_scene({0.0, kPi / 2}), 1);
    REQUIRE(sig.num_channels() == 4);
    CHECK(sig.channels(0, 7) == Catch::Approx(1.0).margin(1e-12));
    CHECK(sig.channels(1, 7) == Catch::Approx(0.0).margin(1e-12));
    CHECK(sig.channels(2, 7) == Catch::Approx(0.0).margin(1e-12));
    CHECK(sig.channels(3, 7) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
    CHECK(sig.channels.col(6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode_scene is linear") {
    Rng rng(3);
    PlaneWaveScene one = make_scene(rng, 1, 512);
    PlaneWaveScene two = make_scene(rng, 1, 512);
    PlaneWaveScene both;
    both.sample_rate = one.sample_rate;
    both.sources = {one.sources[0], two.sources[0]};

    const AmbisonicsSignal sum = encode_scene(both, 3);
    const AmbisonicsSignal parts =
        AmbisonicsSignal(3, encode_scene(one, 3).channels + encode_scene(two, 3).channels, one.sample_rate);
    CHECK((sum.channels - parts.channels).cwiseAbs().maxCoeff() < 1e-12);

    PlaneWaveScene zero = one;
    for (auto& s : zero.sources) std::fill(s.waveform.begin(), s.waveform.end(), 0.0);
    CHECK(encode_scene(zero, 3).channels.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode_scene validates waveform lengths") {
    Rng rng(4);
    PlaneWaveScene scene = make_scene(rng, 2, 256);
    scene.sources[1].waveform.resize(128);
    CHECK_THROWS_AS(encode_scene(scene, 1), std::invalid_argument);
    CHECK_THROWS_AS(encode_scene(PlaneWaveScene{}, 1), std::invalid_argument);
}

TEST_CASE("truncate keeps leading channels bit-identical") {
    Rng rng(5);
    const AmbisonicsSignal hoa = encode_scene(make_scene(rng, 2, 300), 3);
    const AmbisonicsSignal foa = truncate(hoa, 1);
    REQUIRE(foa.num_channels() == 4);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 300; ++i) REQUIRE(foa.channels(c, i) == hoa.channels(c, i));

    const AmbisonicsSignal same = truncate(hoa, 3);
    CHECK((same.channels - hoa.channels).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(truncate(foa, 2), std::invalid_argument);
}

TEST_CASE("truncation commutes with encoding") {
    Rng rng(6);
    const PlaneWaveScene scene = make_scene(rng, 3, 400);
    for (int target = 0; target <= 2; ++target) {
        const Eigen::MatrixXd a = truncate(encode_scene(scene, 3), target).channels;
        const Eigen::MatrixXd b = encode_scene(scene, target).channels;
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("energy map basics") {
    const double step = kPi / 18;  // 10 degrees
    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(16, 100);
    const EnergyMap zero_map = directional_energy_map(AmbisonicsSignal(3, zeros, 16000.0), step, step);
    CHECK(zero_map.values.maxCoeff() == 0.0);
    CHECK(zero_map.values.rows() == 36);
    CHECK(zero_map.values.cols() == 19);

    CHECK_THROWS_AS(directional_energy_map(AmbisonicsSignal(3, zeros, 16000.0), 0.37, step),
                    std::invalid_argument);
}

TEST_CASE("energy map argmax recovers a grid-aligned source") {
    const double step = kPi / 90;  // 2 degrees
    Rng rng(7);
    for (int trial = 0; trial < 6; ++trial) {
        const int az_idx = static_cast<int>(rng.integer(180));
        const int col_idx = static_cast<int>(rng.integer(89)) + 1;  // keep off the poles
        const Direction doa{step * az_idx, step * col_idx};

        Rng srng(100 + static_cast<std::uint64_t>(trial));
        PlaneWaveScene scene;
        scene.sample_rate = 16000.0;
        scene.sources.push_back(PlaneWaveSource{doa, testing::synth_speechlike(srng, 2048), 1.0});
        const EnergyMap map = directional_energy_map(encode_scene(scene, 3), step, step);

        Eigen::Index best_az = 0, best_col = 0;
        map.values.maxCoeff(&best_az, &best_col);
        CHECK(best_az == az_idx);
        CHECK(best_col == col_idx);
    }
}

TEST_CASE("energy map shifts with scene azimuth rotation") {
    const double step = kPi / 45;  // 4 degrees for speed
    Rng rng(8);
    PlaneWaveScene scene = make_scene(rng, 2, 2048);
    const EnergyMap base = directional_energy_map(encode_scene(scene, 3), step, step);

    PlaneWaveScene rotated = scene;
    for (auto& src : rotated.sources) src.doa.azimuth = std::fmod(src.doa.azimuth + step, kTwoPi);
    const EnergyMap shifted = directional_energy_map(encode_scene(rotated, 3), step, step);

    const Eigen::Index n_az = base.values.rows();
    double max_dev = 0.0;
    for (Eigen::Index i = 0; i < n_az; ++i)
        max_dev = std::max(max_dev,
                           (shifted.values.row((i + 1) % n_az) - base.values.row(i)).cwiseAbs().maxCoeff());
    CHECK(max_dev < 1e-9);
}
