#pragma once

// Minimal RIFF/WAVE reader and writer. Writing always emits float32
// (IEEE_FLOAT); reading accepts PCM16, PCM24, PCM32, float32 and float64,
// including the WAVE_FORMAT_EXTENSIBLE wrappers.

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "diffau/common.hpp"

namespace diffau {

struct WavData {
    Eigen::MatrixXd samples;  // channels x frames, in [-1, 1] nominal
    double sample_rate = 0.0;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_u16(std::ostream& out, std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); }

template <typename T>
T read_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

}  // namespace detail

inline void write_wav_float32(const std::filesystem::path& path, const Eigen::MatrixXd& samples, double sample_rate) {
    const std::uint16_t channels = static_cast<std::uint16_t>(samples.rows());
    const std::uint32_t frames = static_cast<std::uint32_t>(samples.cols());
    const std::uint32_t data_bytes = frames * channels * 4u;

    atomic_write(path, [&](std::ostream& out) {
        out.write("RIFF", 4);
        detail::put_u32(out, 4 + 26 + 12 + 8 + data_bytes);
        out.write("WAVE", 4);
        out.write("fmt ", 4);
        detail::put_u32(out, 18);
        detail::put_u16(out, 3);  // IEEE float
        detail::put_u16(out, channels);
        detail::put_u32(out, static_cast<std::uint32_t>(sample_rate));
        detail::put_u32(out, static_cast<std::uint32_t>(sample_rate) * channels * 4u);
        detail::put_u16(out, static_cast<std::uint16_t>(channels * 4u));
        detail::put_u16(out, 32);
        detail::put_u16(out, 0);  // cbSize
        out.write("fact", 4);
        detail::put_u32(out, 4);
        detail::put_u32(out, frames);
        out.write("data", 4);
        detail::put_u32(out, data_bytes);
        std::vector<float> interleaved(static_cast<size_t>(frames) * channels);
        for (std::uint32_t i = 0; i < frames; ++i)
            for (std::uint16_t c = 0; c < channels; ++c)
                interleaved[static_cast<size_t>(i) * channels + c] = static_cast<float>(samples(c, i));
        out.write(reinterpret_cast<const char*>(interleaved.data()),
                  static_cast<std::streamsize>(interleaved.size() * 4));
    });
}

inline WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open WAV file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw io_error("not a RIFF/WAVE file: " + path.string());

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = detail::read_le<std::uint32_t>(bytes.data() + pos + 4);
        const unsigned char* body = bytes.data() + pos + 8;
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
            format = detail::read_le<std::uint16_t>(body);
            channels = detail::read_le<std::uint16_t>(body + 2);
            rate = detail::read_le<std::uint32_t>(body + 4);
            bits = detail::read_le<std::uint16_t>(body + 14);
            if (format == 0xFFFE && chunk_len >= 40)  // extensible: first two bytes of the GUID
                format = detail::read_le<std::uint16_t>(body + 24);
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            data_off = pos + 8;
            data_len = std::min<size_t>(chunk_len, bytes.size() - data_off);
        }
        pos += 8 + chunk_len + (chunk_len & 1u);
    }
    if (channels == 0 || rate == 0 || data_off == 0)
        throw io_error("missing fmt/data chunk: " + path.string());

    const size_t bytes_per_sample = bits / 8;
    if (bytes_per_sample == 0) throw io_error("bad bit depth in " + path.string());
    const size_t frames = data_len / (bytes_per_sample * channels);
    Eigen::MatrixXd samples(channels, static_cast<Eigen::Index>(frames));

    const unsigned char* p = bytes.data() + data_off;
    for (size_t i = 0; i < frames; ++i) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* s = p + (i * channels + c) * bytes_per_sample;
            double v = 0.0;
            if (format == 1 && bits == 16) {
                v = detail::read_le<std::int16_t>(s) / 32768.0;
            } else if (format == 1 && bits == 24) {
                std::int32_t raw = (s[0] << 8) | (s[1] << 16) | (static_cast<std::int32_t>(static_cast<std::int8_t>(s[2])) << 24);
                v = (raw >> 8) / 8388608.0;
            } else if (format == 1 && bits == 32) {
                v = detail::read_le<std::int32_t>(s) / 2147483648.0;
            } else if (format == 3 && bits == 32) {
                v = detail::read_le<float>(s);
            } else if (format == 3 && bits == 64) {
                v = detail::read_le<double>(s);
            } else {
                throw io_error("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                               std::to_string(bits) + " bit) in " + path.string());
            }
            samples(c, static_cast<Eigen::Index>(i)) = v;
        }
    }
    return WavData{std::move(samples), static_cast<double>(rate)};
}

}  // namespace diffau
