#pragma once

// Multichannel STFT/ISTFT pair with exact reconstruction.
//
// Conventions: frames are centered (half a window of leading padding), the
// tail is zero-padded so every sample is covered, and analysis spectra are
// divided by the analysis window sum ("spectrum" scaling), which puts
// speech STFT magnitudes in a range the amplitude transform expects.
// Synthesis runs weighted overlap-add divided by the accumulated
// window-product envelope, so any window/hop pair with a nonvanishing
// envelope reconstructs exactly.

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffau/ambisonics.hpp"
#include "diffau/tensors.hpp"

namespace diffau {

struct STFTConfig {
    int window_length = 512;
    int hop = 128;
    int fft_size = 512;
    std::string window = "hann_sqrt";  // "hann_sqrt" | "hann" | "rect"

    int num_bins() const { return fft_size / 2 + 1; }

    void validate() const {
        if (hop <= 0 || window_length <= 0 || fft_size <= 0)
            throw config_error("stft: sizes must be positive");
        if (!(hop <= window_length && window_length <= fft_size))
            throw config_error("stft: need hop <= window_length <= fft_size");
        if (window != "hann_sqrt" && window != "hann" && window != "rect")
            throw config_error("stft: unknown window '" + window + "'");
    }

    friend bool operator==(const STFTConfig&, const STFTConfig&) = default;
};

struct TFSignal {
    ComplexGrid grid;
    STFTConfig config;
    int original_length = 0;
    double sample_rate = 16000.0;
};

namespace detail {

inline std::vector<double> make_window(const STFTConfig& cfg) {
    std::vector<double> w(static_cast<size_t>(cfg.window_length), 1.0);
    if (cfg.window == "rect") return w;
    for (int n = 0; n < cfg.window_length; ++n) {
        const double hann = 0.5 - 0.5 * std::cos(kTwoPi * n / cfg.window_length);  // periodic
        w[static_cast<size_t>(n)] = cfg.window == "hann" ? hann : std::sqrt(hann);
    }
    return w;
}

// FFTW plans are created under a lock and reused; execution on private
// buffers is re-entrant.
class FftwPlans {
  public:
    static FftwPlans& instance() {
        static FftwPlans plans;
        return plans;
    }

    void forward(int n, const double* in, std::complex<double>* out) {
        fftw_plan plan = plan_for(n, true);
        std::vector<double> buf_in(in, in + n);
        fftw_execute_dft_r2c(plan, buf_in.data(), reinterpret_cast<fftw_complex*>(out));
    }

    void inverse(int n, const std::complex<double>* in, double* out) {
        fftw_plan plan = plan_for(n, false);
        std::vector<std::complex<double>> buf_in(in, in + n / 2 + 1);
        fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(buf_in.data()), out);
    }

  private:
    FftwPlans() = default;

    fftw_plan plan_for(int n, bool fwd) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& cache = fwd ? fwd_ : inv_;
        auto it = cache.find(n);
        if (it != cache.end()) return it->second;
        std::vector<double> re(static_cast<size_t>(n));
        std::vector<std::complex<double>> cx(static_cast<size_t>(n / 2 + 1));
        fftw_plan p =
            fwd ? fftw_plan_dft_r2c_1d(n, re.data(), reinterpret_cast<fftw_complex*>(cx.data()),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED)
                : fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(cx.data()), re.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache.emplace(n, p);
        return p;
    }

    std::mutex mutex_;
    std::map<int, fftw_plan> fwd_, inv_;
};

}  // namespace detail

inline TFSignal stft(const AmbisonicsSignal& sig, const STFTConfig& cfg) {
    cfg.validate();
    const int length = static_cast<int>(sig.num_samples());
    if (length < cfg.window_length)
        throw std::invalid_argument("stft: signal shorter than one window");

    const std::vector<double> win = detail::make_window(cfg);
    double win_sum = 0.0;
    for (double w : win) win_sum += w;
    const double scale = 1.0 / win_sum;

    const int pad_front = cfg.window_length / 2;
    const int n_frames = length / cfg.hop + 1;
    const int padded = (n_frames - 1) * cfg.hop + cfg.window_length;
    const int n_bins = cfg.num_bins();

    TFSignal out;
    out.grid = ComplexGrid(static_cast<int>(sig.num_channels()), n_bins, n_frames);
    out.config = cfg;
    out.original_length = length;
    out.sample_rate = sig.sample_rate;

    std::vector<double> padded_sig(static_cast<size_t>(padded), 0.0);
    std::vector<double> frame(static_cast<size_t>(cfg.fft_size), 0.0);
    std::vector<std::complex<double>> spec(static_cast<size_t>(n_bins));
    auto& plans = detail::FftwPlans::instance();

    for (int c = 0; c < out.grid.channels; ++c) {
        std::fill(padded_sig.begin(), padded_sig.end(), 0.0);
        for (int i = 0; i < length; ++i) padded_sig[static_cast<size_t>(pad_front + i)] = sig.channels(c, i);
        for (int k = 0; k < n_frames; ++k) {
            std::fill(frame.begin(), frame.end(), 0.0);
            const int off = k * cfg.hop;
            for (int n = 0; n < cfg.window_length; ++n)
                frame[static_cast<size_t>(n)] = padded_sig[static_cast<size_t>(off + n)] * win[static_cast<size_t>(n)];
            plans.forward(cfg.fft_size, frame.data(), spec.data());
            for (int f = 0; f < n_bins; ++f) out.grid.at(c, f, k) = spec[static_cast<size_t>(f)] * scale;
        }
    }
    return out;
}

inline AmbisonicsSignal istft(const TFSignal& tf) {
    const STFTConfig& cfg = tf.config;
    cfg.validate();
    if (tf.grid.bins != cfg.num_bins())
        throw std::invalid_argument("istft: bin count does not match the config");
    if (tf.original_length < cfg.window_length)
        throw std::invalid_argument("istft: inconsistent original_length");
    const int n_frames = tf.grid.frames;
    if (n_frames != tf.original_length / cfg.hop + 1)
        throw std::invalid_argument("istft: frame count does not match original_length");

    const std::vector<double> win = detail::make_window(cfg);
    double win_sum = 0.0;
    for (double w : win) win_sum += w;

    const int pad_front = cfg.window_length / 2;
    const int padded = (n_frames - 1) * cfg.hop + cfg.window_length;
    const int order = order_from_channels(tf.grid.channels);

    Eigen::MatrixXd channels(tf.grid.channels, tf.original_length);
    std::vector<double> acc(static_cast<size_t>(padded));
    std::vector<double> envelope(static_cast<size_t>(padded), 0.0);
    std::vector<std::complex<double>> spec(static_cast<size_t>(cfg.num_bins()));
    std::vector<double> frame(static_cast<size_t>(cfg.fft_size));
    auto& plans = detail::FftwPlans::instance();

    for (int k = 0; k < n_frames; ++k)
        for (int n = 0; n < cfg.window_length; ++n)
            envelope[static_cast<size_t>(k * cfg.hop + n)] += win[static_cast<size_t>(n)] * win[static_cast<size_t>(n)];

    const double fft_scale = 1.0 / cfg.fft_size;
    for (int c = 0; c < tf.grid.channels; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int k = 0; k < n_frames; ++k) {
            for (int f = 0; f < cfg.num_bins(); ++f) spec[static_cast<size_t>(f)] = tf.grid.at(c, f, k) * win_sum;
            plans.inverse(cfg.fft_size, spec.data(), frame.data());
            const int off = k * cfg.hop;
            for (int n = 0; n < cfg.window_length; ++n)
                acc[static_cast<size_t>(off + n)] += frame[static_cast<size_t>(n)] * fft_scale * win[static_cast<size_t>(n)];
        }
        for (int i = 0; i < tf.original_length; ++i) {
            const size_t p = static_cast<size_t>(pad_front + i);
            channels(c, i) = envelope[p] > 0.0 ? acc[p] / envelope[p] : 0.0;
        }
    }
    return AmbisonicsSignal(order, std::move(channels), tf.sample_rate);
}

}  // namespace diffau
