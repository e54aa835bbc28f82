#pragma once

// Free-field multi-speaker dataset synthesis: corpus ingestion, manifest
// generation with speaker-disjoint splits, and clip rendering. Every clip
// is fully determined by its manifest entry, so any clip can be rebuilt
// from the manifest and the corpus alone.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffau/ambisonics.hpp"
#include "diffau/resample.hpp"
#include "diffau/wav_io.hpp"

namespace diffau {

inline constexpr double kClipSeconds = 2.048;
inline constexpr double kDatasetRate = 16000.0;
inline constexpr int kClipSamples = 32768;  // 2.048 s at 16 kHz
inline constexpr int kDatasetOrder = 3;

struct CorpusEntry {
    std::string id;
    std::vector<double> samples;  // mono, 16 kHz, peak 0.9
};

struct Corpus {
    std::vector<CorpusEntry> entries;
    std::vector<std::string> warnings;

    const CorpusEntry& by_id(const std::string& id) const {
        for (const auto& e : entries)
            if (e.id == id) return e;
        throw std::invalid_argument("corpus: unknown source id '" + id + "'");
    }
};

inline Corpus ingest_corpus(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::invalid_argument("corpus directory not found: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Corpus corpus;
    for (const auto& path : files) {
        try {
            WavData wav = read_wav(path);
            if (wav.samples.rows() != 1) {
                corpus.warnings.push_back("skipping non-mono file: " + path.string());
                continue;
            }
            std::vector<double> mono(wav.samples.cols());
            for (Eigen::Index i = 0; i < wav.samples.cols(); ++i) mono[static_cast<size_t>(i)] = wav.samples(0, i);
            if (wav.sample_rate != kDatasetRate) mono = resample(mono, wav.sample_rate, kDatasetRate);
            double peak = 0.0;
            for (double v : mono) peak = std::max(peak, std::abs(v));
            if (peak <= 0.0) {
                corpus.warnings.push_back("skipping silent file: " + path.string());
                continue;
            }
            for (double& v : mono) v *= 0.9 / peak;
            corpus.entries.push_back(CorpusEntry{path.stem().string(), std::move(mono)});
        } catch (const io_error& e) {
            corpus.warnings.push_back(std::string("skipping unreadable file: ") + e.what());
        }
    }
    if (corpus.entries.empty()) throw std::invalid_argument("corpus is empty: " + dir.string());
    return corpus;
}

struct ManifestSource {
    std::string source_id;
    double azimuth = 0.0;
    double colatitude = 0.0;
    double gain = 1.0;
};

struct ManifestEntry {
    std::string clip_id;
    int speaker_count = 0;
    std::vector<ManifestSource> sources;
    std::string split;  // train | val | test
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::uint64_t seed = 0;
};

struct SplitSpec {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    void validate() const {
        if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9)
            throw config_error("split fractions must be nonnegative and sum to 1");
    }
};

inline void to_json(nlohmann::json& j, const ManifestSource& s) {
    j = {{"source_id", s.source_id}, {"azimuth", s.azimuth}, {"colatitude", s.colatitude}, {"gain", s.gain}};
}
inline void from_json(const nlohmann::json& j, ManifestSource& s) {
    j.at("source_id").get_to(s.source_id);
    j.at("azimuth").get_to(s.azimuth);
    j.at("colatitude").get_to(s.colatitude);
    j.at("gain").get_to(s.gain);
}
inline void to_json(nlohmann::json& j, const ManifestEntry& e) {
    j = {{"clip_id", e.clip_id}, {"speaker_count", e.speaker_count}, {"sources", e.sources},
         {"split", e.split},     {"seed", e.seed}};
}
inline void from_json(const nlohmann::json& j, ManifestEntry& e) {
    j.at("clip_id").get_to(e.clip_id);
    j.at("speaker_count").get_to(e.speaker_count);
    j.at("sources").get_to(e.sources);
    j.at("split").get_to(e.split);
    j.at("seed").get_to(e.seed);
}

// Loop short sources with a 10 ms linear crossfade, or cut long ones.
inline std::vector<double> fit_to_clip_length(const std::vector<double>& src, int length) {
    std::vector<double> out(static_cast<size_t>(length), 0.0);
    if (src.empty()) return out;
    const int xfade = 160;  // 10 ms at 16 kHz
    int pos = 0;
    while (pos < length) {
        const int n = static_cast<int>(src.size());
        if (pos == 0) {
            const int take = std::min(n, length);
            std::copy(src.begin(), src.begin() + take, out.begin());
            pos = take;
        } else {
            const int fade = std::min({xfade, pos, n});
            for (int i = 0; i < fade; ++i) {
                const double a = static_cast<double>(i + 1) / (fade + 1);
                out[static_cast<size_t>(pos - fade + i)] =
                    out[static_cast<size_t>(pos - fade + i)] * (1.0 - a) + src[static_cast<size_t>(i)] * a;
            }
            const int take = std::min(n - fade, length - pos);
            if (take <= 0) break;
            std::copy(src.begin() + fade, src.begin() + fade + take, out.begin() + pos);
            pos += take;
        }
    }
    return out;
}

// Render one clip from its manifest entry: encode the gained sources at
// third order. Deterministic; no randomness beyond the recorded fields.
inline AmbisonicsSignal render_clip(const ManifestEntry& entry, const Corpus& corpus) {
    PlaneWaveScene scene;
    scene.sample_rate = kDatasetRate;
    for (const auto& src : entry.sources) {
        PlaneWaveSource s;
        s.doa = Direction{src.azimuth, src.colatitude};
        s.waveform = fit_to_clip_length(corpus.by_id(src.source_id).samples, kClipSamples);
        s.gain = src.gain;
        scene.sources.push_back(std::move(s));
    }
    return encode_scene(scene, kDatasetOrder);
}

// Draw the manifest: speaker-disjoint splits, uniform speaker count in
// {1..4}, uniform-sphere DOAs. Gains start at one and are then scaled per
// clip so the rendered W channel peaks at 0.9 (a shared canonical level
// for training and evaluation).
inline DatasetManifest synth_manifest(const std::vector<std::string>& corpus_ids, int n_clips,
                                      std::uint64_t seed, const SplitSpec& split) {
    split.validate();
    if (n_clips <= 0) throw std::invalid_argument("synth_manifest: n_clips must be positive");

    std::vector<std::string> ids = corpus_ids;
    Rng rng(seed);
    for (size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.integer(i)]);

    const int n = static_cast<int>(ids.size());
    int n_train = static_cast<int>(std::round(split.train * n));
    int n_val = static_cast<int>(std::round(split.val * n));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    std::map<std::string, std::vector<std::string>> pools;
    pools["train"] = {ids.begin(), ids.begin() + n_train};
    pools["val"] = {ids.begin() + n_train, ids.begin() + n_train + n_val};
    pools["test"] = {ids.begin() + n_train + n_val, ids.end()};

    auto split_of_clip = [&](int i) -> std::string {
        const double u = (static_cast<double>(i) + 0.5) / n_clips;
        if (u < split.train) return "train";
        if (u < split.train + split.val) return "val";
        return "test";
    };
    for (const auto& [name, pool] : pools) {
        bool needed = false;
        for (int i = 0; i < n_clips; ++i) needed |= split_of_clip(i) == name;
        if (needed && pool.size() < 4)
            throw std::invalid_argument("synth_manifest: split '" + name +
                                        "' has fewer than 4 speakers; corpus too small");
    }

    DatasetManifest manifest;
    manifest.seed = seed;
    for (int i = 0; i < n_clips; ++i) {
        ManifestEntry entry;
        entry.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        Rng clip_rng(entry.seed);
        entry.split = split_of_clip(i);
        char buf[32];
        std::snprintf(buf, sizeof buf, "clip_%05d", i);
        entry.clip_id = buf;
        entry.speaker_count = static_cast<int>(clip_rng.integer(4)) + 1;
        const auto& pool = pools[entry.split];
        // distinct sources within the clip
        std::vector<size_t> chosen;
        while (static_cast<int>(chosen.size()) < entry.speaker_count) {
            const size_t k = clip_rng.integer(pool.size());
            if (std::find(chosen.begin(), chosen.end(), k) == chosen.end()) chosen.push_back(k);
        }
        for (size_t k : chosen) {
            const Direction doa = sample_doa(clip_rng);
            entry.sources.push_back(ManifestSource{pool[k], doa.azimuth, doa.colatitude, 1.0});
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

// Normalize a rendered clip to the canonical level by scaling every
// source gain; returns the rescaled render.
inline AmbisonicsSignal canonicalize_clip_level(ManifestEntry& entry, AmbisonicsSignal clip) {
    const double peak = clip.channels.row(0).cwiseAbs().maxCoeff();
    if (peak > 0.0) {
        const double scale = 0.9 / peak;
        for (auto& src : entry.sources) src.gain *= scale;
        clip.channels *= scale;
    }
    return clip;
}

struct SynthResult {
    DatasetManifest manifest;
    std::filesystem::path manifest_path;
    int clips_written = 0;
};

inline SynthResult synth_dataset(const Corpus& corpus, int n_clips, std::uint64_t seed, const SplitSpec& split,
                                 const std::filesystem::path& out_dir) {
    std::vector<std::string> ids;
    ids.reserve(corpus.entries.size());
    for (const auto& e : corpus.entries) ids.push_back(e.id);

    DatasetManifest manifest = synth_manifest(ids, n_clips, seed, split);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "clips");
    SynthResult result;
    for (auto& entry : manifest.entries) {
        AmbisonicsSignal clip = canonicalize_clip_level(entry, render_clip(entry, corpus));
        write_wav_float32(out_dir / "clips" / (entry.clip_id + ".wav"), clip.channels, clip.sample_rate);
        ++result.clips_written;
    }
    result.manifest_path = out_dir / "manifest.jsonl";
    atomic_write(result.manifest_path, [&](std::ostream& out) {
        for (const auto& entry : manifest.entries) out << nlohmann::json(entry).dump() << "\n";
    });
    result.manifest = std::move(manifest);
    return result;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open manifest: " + path.string());
    DatasetManifest manifest;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        manifest.entries.push_back(nlohmann::json::parse(line).get<ManifestEntry>());
    }
    return manifest;
}

}  // namespace diffau
