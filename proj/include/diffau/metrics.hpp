#pragma once

// STFT-domain SDR over the higher-order channels (5-16) and Table-style
// aggregation by speaker count.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffau/dataset.hpp"
#include "diffau/stft.hpp"

namespace diffau {

inline constexpr double kSdrCapDb = 100.0;

// 10*log10(||ref_hi||_F^2 / ||ref_hi - est_hi||_F^2) on raw STFTs,
// channels 5-16 only, capped at +100 dB.
inline double stft_sdr(const AmbisonicsSignal& est, const AmbisonicsSignal& ref, const STFTConfig& cfg) {
    if (est.order != 3 || ref.order != 3)
        throw std::invalid_argument("stft_sdr: both signals must be third order");
    if (est.num_samples() != ref.num_samples() || est.sample_rate != ref.sample_rate)
        throw std::invalid_argument("stft_sdr: shape or rate mismatch");

    const TFSignal tf_est = stft(est, cfg);
    const TFSignal tf_ref = stft(ref, cfg);

    double ref_energy = 0.0, err_energy = 0.0;
    for (int c = 4; c < 16; ++c)
        for (int f = 0; f < tf_ref.grid.bins; ++f)
            for (int t = 0; t < tf_ref.grid.frames; ++t) {
                const std::complex<double> r = tf_ref.grid.at(c, f, t);
                ref_energy += std::norm(r);
                err_energy += std::norm(r - tf_est.grid.at(c, f, t));
            }

    if (ref_energy == 0.0)
        throw std::domain_error("stft_sdr: reference has no energy in channels 5-16");
    if (err_energy == 0.0) return kSdrCapDb;
    return std::min(kSdrCapDb, 10.0 * std::log10(ref_energy / err_energy));
}

struct GroupStats {
    int count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population std; 0 for a single clip
};

struct EvalReport {
    std::map<std::string, double> per_clip;           // clip id -> dB
    std::map<int, GroupStats> by_speaker_count;
    GroupStats overall;
    // Paper reference for context; not reproducible at desk scale.
    double paper_overall_mean = 24.7;
    double paper_overall_std = 6.2;
};

namespace detail {
inline GroupStats stats_of(const std::vector<double>& v) {
    GroupStats s;
    s.count = static_cast<int>(v.size());
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / s.count;
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / s.count);
    return s;
}
}  // namespace detail

inline EvalReport aggregate(const std::map<std::string, double>& scores, const DatasetManifest& manifest,
                            const std::string& split = "") {
    EvalReport report;
    std::vector<std::string> missing;
    std::map<int, std::vector<double>> groups;
    std::vector<double> all;
    for (const auto& entry : manifest.entries) {
        if (!split.empty() && entry.split != split) continue;
        auto it = scores.find(entry.clip_id);
        if (it == scores.end()) {
            missing.push_back(entry.clip_id);
            continue;
        }
        report.per_clip[entry.clip_id] = it->second;
        groups[entry.speaker_count].push_back(it->second);
        all.push_back(it->second);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "aggregate: missing scores for " << missing.size() << " clips:";
        for (const auto& id : missing) msg << ' ' << id;
        throw std::invalid_argument(msg.str());
    }
    if (all.empty()) throw std::invalid_argument("aggregate: no clips to aggregate");
    for (const auto& [count, v] : groups) report.by_speaker_count[count] = detail::stats_of(v);
    report.overall = detail::stats_of(all);
    return report;
}

inline std::string format_report_text(const EvalReport& r, const std::string& method = "DiffAU") {
    std::ostringstream out;
    out << "STFT-SDR on HOA channels (5-16), dB\n";
    out << "# Speakers | " << method << "        | # Audios\n";
    char line[128];
    for (const auto& [count, s] : r.by_speaker_count) {
        std::snprintf(line, sizeof line, "%10d | %6.1f +- %4.1f | %d\n", count, s.mean, s.stddev, s.count);
        out << line;
    }
    std::snprintf(line, sizeof line, "%10s | %6.1f +- %4.1f | %d\n", "Overall", r.overall.mean, r.overall.stddev,
                  r.overall.count);
    out << line;
    std::snprintf(line, sizeof line,
                  "(reference: published full-scale DiffAU overall %.1f +- %.1f dB; not desk-reproducible)\n",
                  r.paper_overall_mean, r.paper_overall_std);
    out << line;
    return out.str();
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [count, s] : r.by_speaker_count)
        groups[std::to_string(count)] = {{"count", s.count}, {"mean_db", s.mean}, {"std_db", s.stddev}};
    return {{"per_clip_db", r.per_clip},
            {"by_speaker_count", groups},
            {"overall", {{"count", r.overall.count}, {"mean_db", r.overall.mean}, {"std_db", r.overall.stddev}}},
            {"paper_reference",
             {{"overall_mean_db", r.paper_overall_mean},
              {"overall_std_db", r.paper_overall_std},
              {"desk_reproducible", false}}}};
}

}  // namespace diffau
