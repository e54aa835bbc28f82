#include <catch2/catch_amalgamated.hpp>

#include "diffau/metrics.hpp"
#include "support/test_signals.hpp"

using namespace diffau;

namespace {

AmbisonicsSignal test_hoa(std::uint64_t seed, int n_sources = 2, int n = 8192) {
    Rng rng(seed);
    return encode_scene(testing::make_scene(rng, n_sources, n), 3);
}

}  // namespace

TEST_CASE("stft_sdr caps, zeros and the 20 dB case") {
    const AmbisonicsSignal ref = test_hoa(1);
    const STFTConfig cfg{};

    CHECK(stft_sdr(ref, ref, cfg) == kSdrCapDb);

    AmbisonicsSignal silent_hi = ref;
    silent_hi.channels.bottomRows(12).setZero();
    CHECK(stft_sdr(silent_hi, ref, cfg) == Catch::Approx(0.0).margin(1e-9));

    // scaling channels 5-16 by 0.9 puts exactly 1% of the reference energy
    // into the error, by linearity of the STFT
    AmbisonicsSignal scaled = ref;
    scaled.channels.bottomRows(12) *= 0.9;
    CHECK(stft_sdr(scaled, ref, cfg) == Catch::Approx(20.0).margin(1e-9));
}

TEST_CASE("stft_sdr joint-scaling invariance") {
    const AmbisonicsSignal ref = test_hoa(2);
    AmbisonicsSignal est = ref;
    est.channels.bottomRows(12) *= 0.97;
    const STFTConfig cfg{};
    const double base = stft_sdr(est, ref, cfg);

    for (double c : {2.0, 0.25, -4.0}) {  // powers of two scale without rounding
        AmbisonicsSignal est_c = est, ref_c = ref;
        est_c.channels *= c;
        ref_c.channels *= c;
        REQUIRE(stft_sdr(est_c, ref_c, cfg) == base);
    }
    AmbisonicsSignal est3 = est, ref3 = ref;
    est3.channels *= 3.0;
    ref3.channels *= 3.0;
    CHECK(stft_sdr(est3, ref3, cfg) == Catch::Approx(base).margin(1e-10));
}

TEST_CASE("stft_sdr is strictly decreasing in error energy") {
    const AmbisonicsSignal ref = test_hoa(3);
    const STFTConfig cfg{};
    double prev = kSdrCapDb;
    for (double shrink : {0.999, 0.99, 0.9, 0.5}) {
        AmbisonicsSignal est = ref;
        est.channels.bottomRows(12) *= shrink;
        const double sdr = stft_sdr(est, ref, cfg);
        REQUIRE(sdr < prev);
        prev = sdr;
    }
}

TEST_CASE("stft_sdr error handling") {
    const AmbisonicsSignal ref = test_hoa(4);
    AmbisonicsSignal zero_ref = ref;
    zero_ref.channels.bottomRows(12).setZero();
    CHECK_THROWS_AS(stft_sdr(ref, zero_ref, STFTConfig{}), std::domain_error);

    AmbisonicsSignal foa = truncate(ref, 1);
    CHECK_THROWS_AS(stft_sdr(foa, ref, STFTConfig{}), std::invalid_argument);

    Rng rng(5);
    AmbisonicsSignal other = encode_scene(testing::make_scene(rng, 1, 4096), 3);
    CHECK_THROWS_AS(stft_sdr(other, ref, STFTConfig{}), std::invalid_argument);
}

TEST_CASE("aggregate matches hand-computed statistics") {
    DatasetManifest manifest;
    auto add = [&](const std::string& id, int count, const std::string& split) {
        ManifestEntry e;
        e.clip_id = id;
        e.speaker_count = count;
        e.split = split;
        manifest.entries.push_back(e);
    };
    add("a", 1, "test");
    add("b", 1, "test");
    add("c", 2, "test");
    add("d", 3, "train");

    std::map<std::string, double> scores{{"a", 10.0}, {"b", 14.0}, {"c", 20.0}};
    const EvalReport r = aggregate(scores, manifest, "test");
    CHECK(r.overall.count == 3);
    CHECK(r.overall.mean == Catch::Approx((10.0 + 14.0 + 20.0) / 3).margin(1e-12));
    CHECK(r.by_speaker_count.at(1).mean == Catch::Approx(12.0).margin(1e-12));
    CHECK(r.by_speaker_count.at(1).stddev == Catch::Approx(2.0).margin(1e-12));
    CHECK(r.by_speaker_count.at(2).count == 1);
    CHECK(r.by_speaker_count.at(2).stddev == 0.0);

    // paper context row rides along, flagged not desk-reproducible
    CHECK(r.paper_overall_mean == Catch::Approx(24.7));
    CHECK(r.paper_overall_std == Catch::Approx(6.2));
    const nlohmann::json j = report_to_json(r);
    CHECK(j.at("paper_reference").at("desk_reproducible").get<bool>() == false);
    CHECK(format_report_text(r).find("not desk-reproducible") != std::string::npos);

    std::map<std::string, double> incomplete{{"a", 10.0}};
    CHECK_THROWS_WITH(aggregate(incomplete, manifest, "test"), Catch::Matchers::ContainsSubstring("b"));
}
