#include <catch2/catch_amalgamated.hpp>

#include "diffau/stft.hpp"
#include "support/test_signals.hpp"

using namespace diffau;

namespace {

AmbisonicsSignal noise_signal(int channels, int samples, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(channels, samples);
    for (int c = 0; c < channels; ++c)
        for (int i = 0; i < samples; ++i) m(c, i) = rng.normal();
    return AmbisonicsSignal(order_from_channels(channels), std::move(m), 16000.0);
}

double reconstruction_error(const AmbisonicsSignal& sig, const STFTConfig& cfg) {
    const AmbisonicsSignal back = istft(stft(sig, cfg));
    return (back.channels - sig.channels).norm() / sig.channels.norm();
}

}  // namespace

TEST_CASE("stft of silence is zero and shapes are as documented") {
    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 32768);
    const TFSignal tf = stft(AmbisonicsSignal(1, zeros, 16000.0), STFTConfig{});
    CHECK(tf.grid.channels == 4);
    CHECK(tf.grid.bins == 257);
    CHECK(tf.grid.frames == 257);
    for (const auto& v : tf.grid.data) REQUIRE(v == std::complex<double>(0.0, 0.0));
}

TEST_CASE("stft/istft round trip") {
    const STFTConfig cfg{};
    CHECK(reconstruction_error(noise_signal(1, 32768, 1), cfg) < 1e-12);
    CHECK(reconstruction_error(noise_signal(4, 8000, 2), cfg) < 1e-12);  // non-multiple-of-hop length

    Rng rng(3);
    PlaneWaveScene scene = testing::make_scene(rng, 2, 32768);
    CHECK(reconstruction_error(encode_scene(scene, 1), cfg) < 1e-12);

    STFTConfig hann = cfg;
    hann.window = "hann";
    CHECK(reconstruction_error(noise_signal(1, 5000, 4), hann) < 1e-12);

    STFTConfig rect = cfg;
    rect.window = "rect";
    rect.window_length = 512;
    rect.hop = 256;
    CHECK(reconstruction_error(noise_signal(1, 5000, 5), rect) < 1e-12);
}

TEST_CASE("bin-centered sinusoid concentrates in its bin (rect window)") {
    STFTConfig cfg;
    cfg.window = "rect";
    cfg.window_length = 512;
    cfg.hop = 512;  // non-overlapping frames, integer periods per frame
    cfg.fft_size = 512;

    const int bin = 40;
    const double freq = bin * 16000.0 / 512;
    Eigen::MatrixXd m(1, 8192);
    for (int i = 0; i < 8192; ++i) m(0, i) = std::sin(kTwoPi * freq * i / 16000.0);
    const TFSignal tf = stft(AmbisonicsSignal(0, m, 16000.0), cfg);

    // choose an interior frame fully covered by the signal
    const int frame = 5;
    double total = 0.0, at_bin = 0.0;
    for (int f = 0; f < tf.grid.bins; ++f) {
        const double w = (f == 0 || f == tf.grid.bins - 1) ? 1.0 : 2.0;  // one-sided spectrum weights
        const double e = w * std::norm(tf.grid.at(0, f, frame));
        total += e;
        if (f == bin) at_bin = e;
    }
    CHECK(at_bin / total >= 0.99);
}

TEST_CASE("stft validates inputs") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(1, 100);
    CHECK_THROWS_AS(stft(AmbisonicsSignal(0, m, 16000.0), STFTConfig{}), std::invalid_argument);

    STFTConfig bad;
    bad.hop = 1024;
    CHECK_THROWS_AS(stft(noise_signal(1, 4096, 9), bad), config_error);
    bad = STFTConfig{};
    bad.window = "kaiser";
    CHECK_THROWS_AS(stft(noise_signal(1, 4096, 9), bad), config_error);
}

TEST_CASE("istft validates shape and config consistency") {
    TFSignal tf = stft(noise_signal(1, 4096, 10), STFTConfig{});
    TFSignal broken = tf;
    broken.original_length = 1234;  // frame count no longer matches
    CHECK_THROWS_AS(istft(broken), std::invalid_argument);
    TFSignal wrong_bins = tf;
    wrong_bins.config.fft_size = 1024;
    wrong_bins.config.window_length = 1024;
    CHECK_THROWS_AS(istft(wrong_bins), std::invalid_argument);
}

TEST_CASE("istft crops exactly to original_length") {
    const AmbisonicsSignal sig = noise_signal(1, 10000, 11);
    const AmbisonicsSignal back = istft(stft(sig, STFTConfig{}));
    CHECK(back.num_samples() == 10000);
}
